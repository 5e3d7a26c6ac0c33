#pragma once

#define IPDMETA_VERSION "1.0.0"

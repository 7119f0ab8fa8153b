#pragma once

#define LPTAIL_VERSION "0.1.0"

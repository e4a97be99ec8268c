#pragma once

#define SUBCHAIN_VERSION "0.1.0"

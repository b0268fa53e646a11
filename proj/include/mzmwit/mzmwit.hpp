#pragma once

#include "mzmwit/errors.hpp"
#include "mzmwit/fock.hpp"
#include "mzmwit/io.hpp"
#include "mzmwit/parallel.hpp"
#include "mzmwit/protocol.hpp"
#include "mzmwit/states.hpp"
#include "mzmwit/tunneling.hpp"
#include "mzmwit/witness.hpp"

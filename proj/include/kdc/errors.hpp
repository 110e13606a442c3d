// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace kdc {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: config/usage -> 1, data -> 2, numerical -> 3.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct contract_error : std::logic_error {
    using std::logic_error::logic_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace kdc

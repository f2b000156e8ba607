#ifndef KBSIM_ERRORS_HPP
#define KBSIM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kbsim {

// Invalid problem/config data detected before any simulation work starts.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A policy reached a state it cannot act from (exhausted confidence set,
// infeasible allocation with the reject arm disabled, ...).
struct policy_error : std::runtime_error {
    explicit policy_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace kbsim

#endif

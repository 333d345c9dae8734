#pragma once

#include <stdexcept>
#include <string>

namespace rohm {

// Error categories map onto CLI exit codes: usage=2, config=3, data=4.
enum class ErrorKind { Usage = 2, Config = 3, Data = 4 };

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& code, const std::string& msg)
        : std::runtime_error(msg), kind_(kind), code_(code) {}

    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }
    int exit_code() const { return static_cast<int>(kind_); }

  private:
    ErrorKind kind_;
    std::string code_;
};

inline Error usage_error(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::Usage, code, msg);
}
inline Error config_error(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::Config, code, msg);
}
inline Error data_error(const std::string& code, const std::string& msg) {
    return Error(ErrorKind::Data, code, msg);
}

} // namespace rohm

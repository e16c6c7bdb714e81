#ifndef FKIT_TRACE_HPP
#define FKIT_TRACE_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace fkit {

/// Time-stamped multi-signal trajectory. Times strictly increase, every signal
/// has one finite sample per time stamp, and there is at least one sample.
class Trace {
public:
    Trace(std::vector<double> times, std::map<std::string, std::vector<double>> signals);

    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::map<std::string, std::vector<double>>& signals() const { return signals_; }

    bool has_signal(const std::string& name) const { return signals_.count(name) != 0; }
    /// Throws UnknownSignal.
    const std::vector<double>& signal(const std::string& name) const;

    friend bool operator==(const Trace&, const Trace&) = default;

private:
    std::vector<double> times_;
    std::map<std::string, std::vector<double>> signals_;
};

} // namespace fkit

#endif

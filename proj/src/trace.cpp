#include <fkit/trace.hpp>

#include <cmath>

#include <fkit/error.hpp>

namespace fkit {

Trace::Trace(std::vector<double> times, std::map<std::string, std::vector<double>> signals)
    : times_(std::move(times)), signals_(std::move(signals))
{
    if (times_.empty())
        throw Error(ErrorKind::EmptyTrace, "trace has no samples");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!std::isfinite(times_[i]))
            throw Error(ErrorKind::InvalidTrace, "non-finite time stamp at sample " + std::to_string(i));
        if (i > 0 && !(times_[i] > times_[i - 1]))
            throw Error(ErrorKind::InvalidTrace, "time stamps must strictly increase (sample " +
                                                     std::to_string(i) + ")");
    }
    for (const auto& [name, values] : signals_) {
        if (name.empty())
            throw Error(ErrorKind::InvalidTrace, "signal names must be non-empty");
        if (values.size() != times_.size())
            throw Error(ErrorKind::InvalidTrace, "signal '" + name + "' has " + std::to_string(values.size()) +
                                                     " samples, expected " + std::to_string(times_.size()));
        for (double v : values)
            if (!std::isfinite(v))
                throw Error(ErrorKind::InvalidTrace, "signal '" + name + "' has a non-finite sample");
    }
}

const std::vector<double>& Trace::signal(const std::string& name) const
{
    auto it = signals_.find(name);
    if (it == signals_.end())
        throw Error(ErrorKind::UnknownSignal, "trace has no signal '" + name + "'");
    return it->second;
}

} // namespace fkit

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stlmine/errors.hpp"

namespace stlmine {

// Finite timed trace: strictly increasing sample times starting at 0, with a
// real-valued vector per sample. Multi-channel signals keep one column per
// named channel; Boolean signals are encoded as 0/1 channels.
struct TimedTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> values;  // values[i].size() == channels.size()
    std::vector<std::string> channels;

    std::size_t size() const { return times.size(); }
    double span() const { return times.empty() ? 0.0 : times.back(); }

    // -1 when the channel does not exist.
    int channel_index(std::string_view name) const;

    // Linear interpolation at time t (t must lie within [0, span]).
    double value_at(std::size_t channel, double t) const;

    // Throws ContractError if any structural invariant is violated.
    void validate() const;
};

// Named collection of traces sharing one channel list.
struct TraceSet {
    std::vector<std::string> channels;
    std::map<std::string, TimedTrace> traces;  // id -> trace, iterated in id order

    std::size_t size() const { return traces.size(); }
    void insert(const std::string& id, TimedTrace trace);
    void validate() const;
};

// ---- ingestion ------------------------------------------------------------

// Reads trace CSVs (header `time,<ch1>,...`; decimal numbers; '.' decimal
// point). The trace id is the file stem, times are rebased so the first
// sample sits at 0. `schema` restricts/orders the channels kept; when empty,
// the first file's full header defines the channel list.
TraceSet load_traces(const std::vector<std::string>& paths,
                     const std::vector<std::string>& schema = {});

void save_trace_csv(const TimedTrace& trace, const std::string& path);
void save_traces_csv(const TraceSet& ts, const std::string& dir);

// ---- preprocessing --------------------------------------------------------

struct SlidingWindow {
    double size = 1.0;    // seconds
    double offset = 0.5;  // seconds between window starts
};

struct Derivative {
    std::string channel;
    int order = 1;  // 1 or 2
    std::string new_channel;
};

struct RollingMedian {
    std::string channel;
    double window = 1.0;  // centered window width, seconds
    std::string new_channel;
};

using PreprocessStep = std::variant<SlidingWindow, Derivative, RollingMedian>;

// Pure, per-trace, order-independent. sliding_window emits one trace per
// window position (id suffixed with the window index, time axis rebased to
// the window start); windows wider than a trace's span drop that trace with
// a warning pushed to `warnings` (when given). derivative appends a channel
// of repeated forward differences, last value padded. rolling_median appends
// the channel minus its centered rolling median.
TraceSet preprocess(const TraceSet& ts, const PreprocessStep& step,
                    std::vector<std::string>* warnings = nullptr);
TraceSet preprocess(const TraceSet& ts, const std::vector<PreprocessStep>& steps,
                    std::vector<std::string>* warnings = nullptr);

// Parses the compact CLI form, e.g. "sliding_window:1:0.5",
// "derivative:x:2:d2x", "rolling_median:x:0.8:x_detrended".
PreprocessStep parse_preprocess_step(const std::string& text);

// ---- synthetic corpora ----------------------------------------------------

// Deterministic generator for the bundled trace families:
//   overshoot  - x_ref step + lane_change marker + response with a calibrated
//                peak of (x - x_ref); keys: amplitude, amplitude_spread,
//                peak_time, t_lc (fixed lane-change time; random in [1,3]
//                when absent), wiggle, wiggle_freq, noise, track (0 => the
//                response settles off-reference by `amplitude` instead of
//                overshooting), horizon, dt
//   step       - x_ref step + piecewise-linear tracking response; keys:
//                t_step, rise, overshoot, horizon, dt
//   spike      - single Gaussian bump; keys: height, width, t0, horizon, dt
//   lane_dwell - integer lane channel walking over lanes 2..4; keys:
//                dwell_lo, dwell_hi, horizon, dt
// Unknown family -> ContractError. Same (family, params, count, seed) is
// bit-identical across runs.
TraceSet synth_traces(const std::string& family, const std::map<std::string, double>& params,
                      int count, std::uint64_t seed, const std::string& id_prefix = "");

}  // namespace stlmine

#include "stlmine/trace.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "detail_util.hpp"
#include "stlmine/rng.hpp"

namespace fs = std::filesystem;

namespace stlmine {

using detail::format_double;
using detail::parse_double;
using detail::split;
using detail::trim;

// ---- TimedTrace -------------------------------------------------------------

int TimedTrace::channel_index(std::string_view name) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
        if (channels[i] == name) return static_cast<int>(i);
    return -1;
}

double TimedTrace::value_at(std::size_t channel, double t) const {
    if (t <= times.front()) return values.front()[channel];
    if (t >= times.back()) return values.back()[channel];
    auto it = std::lower_bound(times.begin(), times.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - times.begin());
    if (times[hi] == t) return values[hi][channel];
    std::size_t lo = hi - 1;
    double frac = (t - times[lo]) / (times[hi] - times[lo]);
    return values[lo][channel] + frac * (values[hi][channel] - values[lo][channel]);
}

void TimedTrace::validate() const {
    if (times.empty()) throw ContractError("trace has no samples");
    if (times.size() != values.size()) throw ContractError("times/values length mismatch");
    if (times.front() != 0.0) throw ContractError("trace does not start at time 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw ContractError("non-monotone timestamps");
    for (const auto& row : values) {
        if (row.size() != channels.size()) throw ContractError("value width != channel count");
        for (double v : row)
            if (!std::isfinite(v)) throw ContractError("non-finite sample value");
    }
}

// ---- TraceSet ---------------------------------------------------------------

void TraceSet::insert(const std::string& id, TimedTrace trace) {
    if (traces.count(id)) throw ContractError("duplicate trace id '" + id + "'");
    if (channels.empty())
        channels = trace.channels;
    else if (channels != trace.channels)
        throw ContractError("trace '" + id + "' channel list differs from the set's");
    traces.emplace(id, std::move(trace));
}

void TraceSet::validate() const {
    for (const auto& [id, tr] : traces) {
        if (tr.channels != channels)
            throw ContractError("trace '" + id + "' channel list differs from the set's");
        tr.validate();
    }
}

// ---- CSV ingestion ----------------------------------------------------------

static TimedTrace load_one_csv(const std::string& path, const std::vector<std::string>& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
    auto header = split(trim(line), ',');
    for (auto& h : header) h = trim(h);
    if (header.empty() || header[0] != "time")
        throw ParseError(path, 1, "header must start with 'time'");

    std::vector<std::string> channels(header.begin() + 1, header.end());
    // Column selection when a schema restricts/orders the channels.
    std::vector<std::size_t> pick;
    if (!schema.empty()) {
        for (const auto& want : schema) {
            auto it = std::find(channels.begin(), channels.end(), want);
            if (it == channels.end())
                throw ParseError(path, 1, "missing channel '" + want + "'");
            pick.push_back(static_cast<std::size_t>(it - channels.begin()));
        }
        channels = schema;
    } else {
        for (std::size_t i = 0; i < channels.size(); ++i) pick.push_back(i);
    }

    TimedTrace tr;
    tr.channels = channels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        auto cells = split(t, ',');
        if (cells.size() != header.size())
            throw ParseError(path, lineno, "expected " + std::to_string(header.size()) +
                                               " cells, got " + std::to_string(cells.size()));
        double time = 0.0;
        if (!parse_double(trim(cells[0]), time))
            throw ParseError(path, lineno, "malformed number '" + trim(cells[0]) + "'");
        std::vector<double> row(pick.size());
        for (std::size_t c = 0; c < pick.size(); ++c) {
            std::string cell = trim(cells[pick[c] + 1]);
            if (!parse_double(cell, row[c]))
                throw ParseError(path, lineno, "malformed number '" + cell + "'");
            if (!std::isfinite(row[c]))
                throw ParseError(path, lineno, "non-finite value in channel '" + channels[c] + "'");
        }
        if (!tr.times.empty() && !(time > tr.times.back()))
            throw ParseError(path, lineno, "non-monotone timestamps");
        tr.times.push_back(time);
        tr.values.push_back(std::move(row));
    }
    if (tr.times.empty()) throw ParseError(path, lineno, "no samples");

    // Rebase so the first sample sits at 0.
    double t0 = tr.times.front();
    if (t0 != 0.0)
        for (auto& t : tr.times) t -= t0;
    tr.validate();
    return tr;
}

TraceSet load_traces(const std::vector<std::string>& paths,
                     const std::vector<std::string>& schema) {
    TraceSet ts;
    ts.channels = schema;
    for (const auto& path : paths) {
        TimedTrace tr = load_one_csv(path, schema.empty() ? ts.channels : schema);
        ts.insert(fs::path(path).stem().string(), std::move(tr));
    }
    ts.validate();
    return ts;
}

void save_trace_csv(const TimedTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write '" + path + "'");
    out << "time";
    for (const auto& ch : trace.channels) out << ',' << ch;
    out << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << format_double(trace.times[i]);
        for (double v : trace.values[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

void save_traces_csv(const TraceSet& ts, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& [id, tr] : ts.traces) save_trace_csv(tr, (fs::path(dir) / (id + ".csv")).string());
}

// ---- preprocessing ----------------------------------------------------------

static constexpr double kTimeTol = 1e-9;

static void apply_sliding_window(const std::string& id, const TimedTrace& tr,
                                 const SlidingWindow& w, TraceSet& out,
                                 std::vector<std::string>* warnings) {
    if (w.size <= 0 || w.offset <= 0) throw ContractError("sliding_window needs size, offset > 0");
    if (tr.span() + kTimeTol < w.size) {
        if (warnings)
            warnings->push_back("trace '" + id + "': window " + format_double(w.size) +
                                "s exceeds span " + format_double(tr.span()) + "s, skipped");
        return;
    }
    int index = 0;
    for (double start = 0.0; start <= tr.span() - w.size + kTimeTol; start += w.offset, ++index) {
        double stop = start + w.size;
        TimedTrace win;
        win.channels = tr.channels;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (tr.times[i] >= start - kTimeTol && tr.times[i] <= stop + kTimeTol) {
                win.times.push_back(tr.times[i] - start);
                win.values.push_back(tr.values[i]);
            }
        }
        if (win.size() < 2) {
            if (warnings)
                warnings->push_back("trace '" + id + "': window " + std::to_string(index) +
                                    " has fewer than 2 samples, skipped");
            continue;
        }
        if (win.times.front() != 0.0) {
            double t0 = win.times.front();
            for (auto& t : win.times) t -= t0;
        }
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "__w%03d", index);
        out.insert(id + suffix, std::move(win));
    }
}

static std::vector<double> forward_diff(const TimedTrace& tr, const std::vector<double>& v) {
    std::size_t n = v.size();
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i]) / (tr.times[i + 1] - tr.times[i]);
    if (n >= 2) d[n - 1] = d[n - 2];  // last value padded to keep the length
    return d;
}

static void apply_derivative(const std::string& id, const TimedTrace& tr, const Derivative& spec,
                             TraceSet& out) {
    int ch = tr.channel_index(spec.channel);
    if (ch < 0) throw ContractError("derivative: unknown channel '" + spec.channel + "'");
    if (spec.order != 1 && spec.order != 2) throw ContractError("derivative order must be 1 or 2");
    if (spec.new_channel.empty()) throw ContractError("derivative needs a new channel name");

    std::vector<double> col(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) col[i] = tr.values[i][ch];
    for (int o = 0; o < spec.order; ++o) col = forward_diff(tr, col);

    TimedTrace res = tr;
    res.channels.push_back(spec.new_channel);
    for (std::size_t i = 0; i < res.size(); ++i) res.values[i].push_back(col[i]);
    out.insert(id, std::move(res));
}

static double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

static void apply_rolling_median(const std::string& id, const TimedTrace& tr,
                                 const RollingMedian& spec, TraceSet& out) {
    int ch = tr.channel_index(spec.channel);
    if (ch < 0) throw ContractError("rolling_median: unknown channel '" + spec.channel + "'");
    if (spec.window <= 0) throw ContractError("rolling_median window must be > 0");
    if (spec.new_channel.empty()) throw ContractError("rolling_median needs a new channel name");

    double half = spec.window / 2.0;
    TimedTrace res = tr;
    res.channels.push_back(spec.new_channel);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        std::vector<double> near;
        for (std::size_t j = 0; j < tr.size(); ++j)
            if (std::abs(tr.times[j] - tr.times[i]) <= half + kTimeTol)
                near.push_back(tr.values[j][ch]);
        res.values[i].push_back(tr.values[i][ch] - median_of(std::move(near)));
    }
    out.insert(id, std::move(res));
}

TraceSet preprocess(const TraceSet& ts, const PreprocessStep& step,
                    std::vector<std::string>* warnings) {
    TraceSet out;
    for (const auto& [id, tr] : ts.traces) {
        if (const auto* w = std::get_if<SlidingWindow>(&step)) {
            apply_sliding_window(id, tr, *w, out, warnings);
        } else if (const auto* d = std::get_if<Derivative>(&step)) {
            apply_derivative(id, tr, *d, out);
        } else {
            apply_rolling_median(id, tr, std::get<RollingMedian>(step), out);
        }
    }
    out.validate();
    return out;
}

TraceSet preprocess(const TraceSet& ts, const std::vector<PreprocessStep>& steps,
                    std::vector<std::string>* warnings) {
    TraceSet cur = ts;
    for (const auto& step : steps) cur = preprocess(cur, step, warnings);
    return cur;
}

PreprocessStep parse_preprocess_step(const std::string& text) {
    auto parts = split(text, ':');
    auto need_num = [&](const std::string& s, const char* what) {
        double v = 0;
        if (!parse_double(s, v)) throw ContractError(std::string("preprocess: bad ") + what + " '" + s + "'");
        return v;
    };
    if (parts.empty()) throw ContractError("empty preprocess step");
    if (parts[0] == "sliding_window" && parts.size() == 3)
        return SlidingWindow{need_num(parts[1], "size"), need_num(parts[2], "offset")};
    if (parts[0] == "derivative" && parts.size() == 4)
        return Derivative{parts[1], static_cast<int>(need_num(parts[2], "order")), parts[3]};
    if (parts[0] == "rolling_median" && parts.size() == 4)
        return RollingMedian{parts[1], need_num(parts[2], "window"), parts[3]};
    throw ContractError("unknown preprocess step '" + text + "'");
}

// ---- synthetic corpora -------------------------------------------------------

namespace {

double param_or(const std::map<std::string, double>& p, const std::string& key, double dflt) {
    auto it = p.find(key);
    return it == p.end() ? dflt : it->second;
}

// Snaps t to the sample grid so engineered peaks land on samples.
double snap(double t, double dt) { return std::round(t / dt) * dt; }

TimedTrace synth_overshoot(const std::map<std::string, double>& p, Rng& rng) {
    double horizon = param_or(p, "horizon", 10.0);
    double dt = param_or(p, "dt", 0.05);
    double amplitude = param_or(p, "amplitude", 0.3);
    double spread = param_or(p, "amplitude_spread", 0.0);
    double peak = param_or(p, "peak_time", 0.5);
    double peak_spread = param_or(p, "peak_spread", 0.0);
    double wiggle = param_or(p, "wiggle", 0.0);
    double wfreq = param_or(p, "wiggle_freq", 1.5);
    double noise = param_or(p, "noise", 0.0);
    bool track = param_or(p, "track", 1.0) != 0.0;
    double t_lc = p.count("t_lc") ? snap(p.at("t_lc"), dt) : snap(rng.uniform(1.0, 3.0), dt);

    double a = amplitude + (spread > 0 ? rng.uniform(-spread, spread) : 0.0);
    double pk = peak + (peak_spread > 0 ? rng.uniform(-peak_spread, peak_spread) : 0.0);
    pk = std::max(snap(pk, dt), 2.0 * dt);
    double level = track ? 1.0 : 1.0 + a;  // off-reference settle level
    double bump = track ? a : 0.0;
    const double ramp = 0.1;  // settle time of the tracking ramp

    TimedTrace tr;
    tr.channels = {"x_ref", "lane_change", "x"};
    int n = static_cast<int>(std::round(horizon / dt));
    for (int i = 0; i <= n; ++i) {
        double t = i * dt;
        double ref = t >= t_lc ? 1.0 : 0.0;
        // one-sample pulse marking the lane-change event
        double lc = std::abs(t - t_lc) < 0.5 * dt ? 1.0 : 0.0;
        double x;
        if (t < t_lc) {
            x = wiggle * std::sin(2.0 * M_PI * wfreq * (t - t_lc));
        } else {
            double s = t - t_lc;
            double r = s >= ramp ? 1.0 : s / ramp;
            // (s/pk)e^{1-s/pk} peaks at exactly 1 when s == pk, so the
            // maximum of x - x_ref equals `a` on the sample grid.
            double b = (s / pk) * std::exp(1.0 - s / pk);
            x = level * r + bump * b;
        }
        if (noise > 0) x += rng.uniform(-noise, noise);
        tr.times.push_back(t);
        tr.values.push_back({ref, lc, x});
    }
    return tr;
}

TimedTrace synth_step(const std::map<std::string, double>& p, Rng& rng) {
    double horizon = param_or(p, "horizon", 10.0);
    double dt = param_or(p, "dt", 0.05);
    double rise = param_or(p, "rise", 0.5);
    double overshoot = param_or(p, "overshoot", 0.2);
    double spread = param_or(p, "overshoot_spread", 0.0);
    double noise = param_or(p, "noise", 0.0);
    double t_step = p.count("t_step") ? snap(p.at("t_step"), dt) : snap(rng.uniform(1.0, 3.0), dt);

    double os = overshoot + (spread > 0 ? rng.uniform(-spread, spread) : 0.0);
    double t_peak = t_step + rise + 0.5;  // linear fall back to 1 after the peak

    TimedTrace tr;
    tr.channels = {"x_ref", "x"};
    int n = static_cast<int>(std::round(horizon / dt));
    for (int i = 0; i <= n; ++i) {
        double t = i * dt;
        double ref = t >= t_step ? 1.0 : 0.0;
        double x;
        // Piecewise linear: flat, ramp to 1+os, fall to 1, flat. The slope
        // breaks give the second difference clear spikes for the step
        // template.
        if (t < t_step) {
            x = 0.0;
        } else if (t < t_step + rise) {
            x = (1.0 + os) * (t - t_step) / rise;
        } else if (t < t_peak) {
            x = (1.0 + os) - os * (t - (t_step + rise)) / 0.5;
        } else {
            x = 1.0;
        }
        if (noise > 0) x += rng.uniform(-noise, noise);
        tr.times.push_back(t);
        tr.values.push_back({ref, x});
    }
    return tr;
}

TimedTrace synth_spike(const std::map<std::string, double>& p, Rng& rng) {
    double horizon = param_or(p, "horizon", 10.0);
    double dt = param_or(p, "dt", 0.05);
    double height = param_or(p, "height", 1.0);
    double spread = param_or(p, "height_spread", 0.0);
    double width = param_or(p, "width", 0.3);
    double noise = param_or(p, "noise", 0.0);
    double t0 = p.count("t0") ? snap(p.at("t0"), dt) : snap(rng.uniform(2.0, horizon - 2.0), dt);

    double h = height + (spread > 0 ? rng.uniform(-spread, spread) : 0.0);

    TimedTrace tr;
    tr.channels = {"x"};
    int n = static_cast<int>(std::round(horizon / dt));
    for (int i = 0; i <= n; ++i) {
        double t = i * dt;
        double u = (t - t0) / width;
        double x = h * std::exp(-u * u);
        if (noise > 0) x += rng.uniform(-noise, noise);
        tr.times.push_back(t);
        tr.values.push_back({x});
    }
    return tr;
}

TimedTrace synth_lane_dwell(const std::map<std::string, double>& p, Rng& rng) {
    double horizon = param_or(p, "horizon", 100.0);
    double dt = param_or(p, "dt", 0.5);
    double dwell_lo = param_or(p, "dwell_lo", 2.0);
    double dwell_hi = param_or(p, "dwell_hi", 30.0);

    // Piecewise-constant walk over lanes 2..4, adjacent switches only.
    int lane = 2 + static_cast<int>(rng.index(3));
    std::vector<std::pair<double, int>> segments;  // (end time, lane)
    double t = 0.0;
    while (t < horizon) {
        double dwell = snap(rng.uniform(dwell_lo, dwell_hi), dt);
        if (dwell < dt) dwell = dt;
        t += dwell;
        segments.emplace_back(std::min(t, horizon), lane);
        int next = lane + (rng.uniform() < 0.5 ? -1 : 1);
        if (next < 2) next = 3;
        if (next > 4) next = 3;
        lane = next;
    }

    TimedTrace tr;
    tr.channels = {"lane"};
    int n = static_cast<int>(std::round(horizon / dt));
    std::size_t seg = 0;
    for (int i = 0; i <= n; ++i) {
        double time = i * dt;
        while (seg + 1 < segments.size() && time > segments[seg].first + kTimeTol) ++seg;
        tr.times.push_back(time);
        tr.values.push_back({static_cast<double>(segments[seg].second)});
    }
    return tr;
}

}  // namespace

TraceSet synth_traces(const std::string& family, const std::map<std::string, double>& params,
                      int count, std::uint64_t seed, const std::string& id_prefix) {
    if (count < 1) throw ContractError("synth_traces: count must be >= 1");
    TimedTrace (*gen)(const std::map<std::string, double>&, Rng&) = nullptr;
    if (family == "overshoot")
        gen = synth_overshoot;
    else if (family == "step")
        gen = synth_step;
    else if (family == "spike")
        gen = synth_spike;
    else if (family == "lane_dwell")
        gen = synth_lane_dwell;
    else
        throw ContractError("unknown synthetic family '" + family + "'");

    std::string prefix = id_prefix.empty() ? family : id_prefix;
    Rng rng(seed);
    TraceSet ts;
    for (int i = 0; i < count; ++i) {
        char id[64];
        std::snprintf(id, sizeof(id), "%s_%03d", prefix.c_str(), i);
        TimedTrace tr = gen(params, rng);
        tr.validate();
        ts.insert(id, std::move(tr));
    }
    return ts;
}

}  // namespace stlmine

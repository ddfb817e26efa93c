#include "afcmem/routing.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "parallel.hpp"

namespace afcmem::routing {

double VoltageSchedule::at(double t) const {
  if (segments.empty()) return 0.0;
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const Segment& s) { return v < s.start; });
  if (it == segments.begin()) return segments.front().voltage;
  return std::prev(it)->voltage;
}

const VoltageSchedule& validate(const VoltageSchedule& s) {
  for (std::size_t i = 0; i < s.segments.size(); ++i) {
    if (!std::isfinite(s.segments[i].voltage) || !std::isfinite(s.segments[i].start))
      fail(ErrorCode::NonFiniteSample, "schedule entries must be finite");
    if (i > 0 && !(s.segments[i].start > s.segments[i - 1].start))
      fail(ErrorCode::DomainError, "schedule start times must be strictly increasing");
  }
  return s;
}

const Channel& ChannelPlan::find(const std::string& label) const {
  for (const auto& c : channels)
    if (c.label == label) return c;
  fail(ErrorCode::UnmatchedChannel, "unknown channel '" + label + "'");
}

const Channel* ChannelPlan::at_voltage(double v) const {
  for (const auto& c : channels)
    if (std::abs(c.dc_voltage - v) <= 1e-6) return &c;
  return nullptr;
}

const ChannelPlan& validate(const ChannelPlan& plan) {
  if (!(plan.eo_slope > 0.0)) fail(ErrorCode::DomainError, "eo_slope must be > 0");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < plan.channels.size(); ++i) {
    const auto& c = plan.channels[i];
    if (!labels.insert(c.label).second) fail(ErrorCode::DomainError, "duplicate channel label '" + c.label + "'");
    const double expected = plan.f_res + plan.eo_slope * c.dc_voltage;
    if (std::abs(c.center_freq - expected) > 1e-6 * plan.eo_slope) {
      std::ostringstream os;
      os << "channel '" << c.label << "' center " << c.center_freq << " Hz is off the EO line (" << expected
         << " Hz)";
      fail(ErrorCode::DomainError, os.str());
    }
    for (std::size_t j = 0; j < i; ++j)
      if (plan.channels[j].center_freq == c.center_freq)
        fail(ErrorCode::DomainError, "channel centers must be distinct");
  }
  return plan;
}

ChannelPlan make_plan(double f_res, double eo_slope, const std::vector<std::pair<std::string, double>>& voltages) {
  ChannelPlan p{f_res, eo_slope, {}};
  for (const auto& [label, v] : voltages) p.channels.push_back({label, f_res + eo_slope * v, v});
  return validate(p);
}

double detuning_from_voltage(const ChannelPlan& plan, double v) { return plan.eo_slope * v; }

DetuningSchedule to_detuning(const ChannelPlan& plan, const VoltageSchedule& schedule) {
  validate(schedule);
  DetuningSchedule d;
  for (const auto& s : schedule.segments) d.segments.push_back({s.start, detuning_from_voltage(plan, s.voltage)});
  return d;
}

namespace {

void check_wave(double period, double duty, double total) {
  if (!(period > 0.0)) fail(ErrorCode::DomainError, "period must be > 0");
  if (!(duty > 0.0 && duty < 1.0)) fail(ErrorCode::DomainError, "duty must lie in (0, 1)");
  if (!(total >= 0.0)) fail(ErrorCode::DomainError, "total must be >= 0");
}

}  // namespace

std::vector<HalfCycle> half_cycles(double period, double duty, double total, double t_start) {
  check_wave(period, duty, total);
  std::vector<HalfCycle> out;
  const auto periods = static_cast<long>(std::ceil(total / period - 1e-9));
  for (long k = 0; k < periods; ++k) {
    const double s = t_start + static_cast<double>(k) * period;
    const double mid = s + duty * period;
    const double e = s + period;
    out.push_back({s, 0.5 * (s + mid), mid, true});
    if (mid - t_start < total) out.push_back({mid, 0.5 * (mid + e), e, false});
  }
  return out;
}

VoltageSchedule square_wave(double period, double v_hi, double v_lo, double duty, double total, double t_start,
                            double min_dt) {
  check_wave(period, duty, total);
  if (min_dt > 0.0 && period < 2.0 * min_dt) {
    std::ostringstream os;
    os << "period " << period << " s is shorter than two simulation steps of " << min_dt << " s";
    fail(ErrorCode::DomainError, os.str());
  }
  VoltageSchedule s;
  for (const auto& h : half_cycles(period, duty, total, t_start)) s.segments.push_back({h.start, h.high ? v_hi : v_lo});
  return s;
}

double lorentzian_crosstalk(double linewidth, double separation) {
  const double h2 = 0.25 * linewidth * linewidth;
  const double l = h2 / (h2 + separation * separation);
  return l * l;
}

afc::AbsorptionSpectrum channel_spectrum(const RoutingSetup& setup) {
  validate(setup.plan);
  if (setup.plan.channels.empty()) fail(ErrorCode::DomainError, "routing needs at least one channel");
  auto comb_for = [&](const Channel& c) {
    auto it = setup.comb_overrides.find(c.label);
    CombSpec comb = it == setup.comb_overrides.end() ? setup.comb : it->second;
    comb.center_offset = setup.plan.detuning(c);
    return validate(comb);
  };
  double lo = 1e300, hi = -1e300, df = 1e300;
  for (const auto& c : setup.plan.channels) {
    const CombSpec comb = comb_for(c);
    const double reach = (0.5 * comb.n_teeth + 8.0) * comb.delta;
    lo = std::min(lo, comb.center_offset - reach);
    hi = std::max(hi, comb.center_offset + reach);
    df = std::min(df, comb.delta / 64.0);
  }
  const double center = 0.5 * (lo + hi);
  auto spec = afc::inhomogeneous_profile(setup.ensemble, setup.cavity.kappa_ions,
                                         FrequencyGrid::symmetric(center, 0.5 * (hi - lo), df), 0.0);
  for (const auto& c : setup.plan.channels) spec = afc::build_comb(spec, comb_for(c), setup.sideholes, setup.b_field);
  return spec;
}

namespace {

struct Prepared {
  echo::EnsembleDiscretization disc;
  double storage = 0.0;
};

Prepared prepare(const RoutingSetup& setup) {
  const auto spec = channel_spectrum(setup);
  echo::DiscretizationOptions opts;
  opts.tooth_period = setup.comb.delta;
  opts.bins_per_tooth_period = setup.bins_per_tooth_period;
  opts.trim = 1e-3;
  return {echo::discretize_ensemble(spec, setup.ensemble.gamma_h, opts), 1.0 / setup.comb.delta};
}

// Echo energy relative to input energy for one pulse.
double run_pulse(const RoutingSetup& setup, const Prepared& prep, const Channel& input_channel, double center,
                 const DetuningSchedule& schedule, Waveform* output = nullptr) {
  const double t0 = center - setup.lead;
  const double t_end = center + prep.storage + 0.5 * setup.window + setup.tail;
  const auto n = static_cast<std::size_t>(std::ceil((t_end - t0) / setup.dt)) + 1;
  const double carrier = setup.plan.detuning(input_channel);
  const Waveform in = raised_cosine_pulse(t0, setup.dt, n, center, setup.pulse_duration, 1.0, carrier);
  echo::TimeDomainOptions opts;
  opts.frame = carrier;
  auto res = echo::simulate_time_domain(prep.disc, setup.cavity, in, &schedule, opts);
  const double eta = echo::efficiency_from_trace(res.output, in, center + prep.storage, setup.window);
  if (output) *output = std::move(res.output);
  return eta;
}

}  // namespace

RouteReport route(const RoutingSetup& setup, const VoltageSchedule& schedule,
                  const std::vector<PulseAssignment>& assignments) {
  validate(setup.plan);
  validate(schedule);
  struct Job {
    const Channel* from;
    const Channel* to;
    double center;
  };
  std::vector<Job> jobs;
  for (const auto& a : assignments) {
    const Channel& from = setup.plan.find(a.channel);
    const Channel* to = setup.plan.at_voltage(schedule.at(a.center));
    if (!to) {
      std::ostringstream os;
      os << "no channel matches the voltage " << schedule.at(a.center) << " V applied at t = " << a.center << " s";
      fail(ErrorCode::UnmatchedChannel, os.str());
    }
    jobs.push_back({&from, to, a.center});
  }

  const Prepared prep = prepare(setup);
  const DetuningSchedule det = to_detuning(setup.plan, schedule);
  std::vector<double> energy(jobs.size());
  detail::parallel_for(jobs.size(), setup.threads, [&](std::size_t i) {
    energy[i] = run_pulse(setup, prep, *jobs[i].from, jobs[i].center, det);
  });

  // Average repeated (from, to) pairs.
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& slot = acc[{jobs[i].from->label, jobs[i].to->label}];
    slot.first += energy[i];
    slot.second += 1;
  }
  RouteReport r;
  for (const auto& [key, v] : acc) r.energy[key] = v.first / v.second;
  for (const auto& c : setup.plan.channels) {
    auto it = r.energy.find({c.label, c.label});
    if (it != r.energy.end()) r.efficiencies.push_back({c.label, it->second});
  }
  for (const auto& [key, e] : r.energy) {
    if (key.first == key.second) continue;
    auto matched = r.energy.find({key.first, key.first});
    if (matched == r.energy.end() || !(matched->second > 0.0)) continue;
    r.crosstalk.push_back({key.first, key.second, e, e / matched->second});
  }
  return r;
}

ShiftRestoreResult store_shift_restore(const RoutingSetup& setup, const std::string& channel, double pulse_center,
                                       const VoltageSchedule& shifted) {
  validate(setup.plan);
  validate(shifted);
  const Channel& ch = setup.plan.find(channel);
  const Prepared prep = prepare(setup);

  ShiftRestoreResult r;
  const VoltageSchedule fixed{{{pulse_center - setup.lead, ch.dc_voltage}}};
  r.eta_static = run_pulse(setup, prep, ch, pulse_center, to_detuning(setup.plan, fixed), &r.static_output);
  r.eta_shifted = run_pulse(setup, prep, ch, pulse_center, to_detuning(setup.plan, shifted), &r.shifted_output);
  r.ratio = r.eta_static > 0.0 ? r.eta_shifted / r.eta_static : 0.0;

  auto off_channel = [&](double lo, double hi) {
    for (double t = lo; t <= hi; t += setup.dt)
      if (std::abs(shifted.at(t) - ch.dc_voltage) > 1e-6) return true;
    return false;
  };
  const double echo_center = pulse_center + prep.storage;
  r.overlap_warning = off_channel(pulse_center - 0.5 * setup.pulse_duration, pulse_center + 0.5 * setup.pulse_duration) ||
                      off_channel(echo_center - 0.5 * setup.window, echo_center + 0.5 * setup.window);
  return r;
}

}  // namespace afcmem::routing

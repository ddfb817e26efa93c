#pragma once

// Electro-optic routing: voltage schedules shift the cavity between channel
// frequencies while each channel holds its own comb.

#include <map>
#include <string>
#include <vector>

#include "afcmem/afc.hpp"
#include "afcmem/core.hpp"
#include "afcmem/echo.hpp"

namespace afcmem::routing {

struct VoltageSchedule {
  struct Segment {
    double start = 0.0;
    double voltage = 0.0;
  };
  std::vector<Segment> segments;

  double at(double t) const;
};

const VoltageSchedule& validate(const VoltageSchedule& s);

struct Channel {
  std::string label;
  double center_freq = 0.0;  // absolute, Hz
  double dc_voltage = 0.0;
};

// Channel n sits at f_res + eo_slope * dc_voltage_n.
struct ChannelPlan {
  double f_res = 0.0;
  double eo_slope = 1.11e9;  // Hz/V
  std::vector<Channel> channels;

  const Channel& find(const std::string& label) const;
  // Channel whose DC voltage equals v (to 1 uV), or nullptr.
  const Channel* at_voltage(double v) const;
  double detuning(const Channel& c) const { return c.center_freq - f_res; }
};

const ChannelPlan& validate(const ChannelPlan& plan);

// Builds a plan from labels and voltages with centers on the EO line.
ChannelPlan make_plan(double f_res, double eo_slope, const std::vector<std::pair<std::string, double>>& voltages);

double detuning_from_voltage(const ChannelPlan& plan, double v);
DetuningSchedule to_detuning(const ChannelPlan& plan, const VoltageSchedule& schedule);

struct HalfCycle {
  double start = 0.0;
  double center = 0.0;
  double end = 0.0;
  bool high = true;
};

// Square wave starting high at t_start. Throws DomainError for period <= 0,
// duty outside (0, 1) or a period shorter than two samples of min_dt.
VoltageSchedule square_wave(double period, double v_hi, double v_lo, double duty, double total,
                            double t_start = 0.0, double min_dt = 0.0);
std::vector<HalfCycle> half_cycles(double period, double duty, double total, double t_start = 0.0);

// Device, combs and pulse settings shared by the routing pipelines. The comb
// template is prepared at every channel center (per-label overrides allowed).
struct RoutingSetup {
  ChannelPlan plan;
  CavityParams cavity;  // kappa_ions is the unburned ion loss
  EnsembleParams ensemble;
  CombSpec comb;
  std::map<std::string, CombSpec> comb_overrides;
  afc::SideholeSpec sideholes{20e6 / 1.855, 30e6 / 1.855, 0.0};
  double b_field = 0.0;
  double dt = 0.1e-9;
  double pulse_duration = 15e-9;  // raised-cosine support
  double window = 20e-9;          // echo integration window
  double lead = 30e-9;            // simulated time before each pulse
  double tail = 40e-9;            // simulated time after each echo
  int bins_per_tooth_period = 32;
  unsigned threads = 1;
};

// Absorption spectrum (detuning from f_res) with one comb per channel.
afc::AbsorptionSpectrum channel_spectrum(const RoutingSetup& setup);

struct PulseAssignment {
  std::string channel;  // label of the input frequency
  double center = 0.0;  // s
};

struct ChannelEfficiency {
  std::string channel;
  double eta_s = 0.0;
};

struct Crosstalk {
  std::string from;
  std::string to;
  double energy = 0.0;  // echo energy / input energy
  double chi = 0.0;     // relative to the matched echo of `from`
};

struct RouteReport {
  std::vector<ChannelEfficiency> efficiencies;
  std::vector<Crosstalk> crosstalk;
  // Echo energy (relative to input) for every simulated (from, to) pair.
  std::map<std::pair<std::string, std::string>, double> energy;
};

// Simulates every assigned pulse independently in the time domain. The
// memory channel of a pulse is the one whose voltage is applied at its center.
RouteReport route(const RoutingSetup& setup, const VoltageSchedule& schedule,
                  const std::vector<PulseAssignment>& assignments);

// Double-pass Lorentzian suppression [(k/2)^2 / ((k/2)^2 + d^2)]^2.
double lorentzian_crosstalk(double linewidth, double separation);

struct ShiftRestoreResult {
  Waveform static_output;
  Waveform shifted_output;
  double eta_static = 0.0;
  double eta_shifted = 0.0;
  double ratio = 0.0;
  bool overlap_warning = false;
};

// Stores one pulse in `channel` under a constant voltage and under `shifted`,
// and compares the echo energies in the window around center + 1/delta.
ShiftRestoreResult store_shift_restore(const RoutingSetup& setup, const std::string& channel,
                                       double pulse_center, const VoltageSchedule& shifted);

}  // namespace afcmem::routing

#include "xtalk/rb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xtalk/dynamics.hpp"
#include "xtalk/errors.hpp"
#include "xtalk/parallel.hpp"

namespace xtalk {

namespace {

using cd = std::complex<double>;

Mat2 rotation(double axis_phase, double angle) {
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    const cd axis = std::polar(1.0, axis_phase);
    Mat2 u;
    u.m = {cd{c, 0.0}, cd{0.0, -1.0} * s * std::conj(axis), cd{0.0, -1.0} * s * axis,
           cd{c, 0.0}};
    return u;
}

/// Equality up to global phase: |tr(a^dag b)| == 2.
bool same_rotation(const Mat2& a, const Mat2& b) {
    const cd tr = std::conj(a.m[0]) * b.m[0] + std::conj(a.m[2]) * b.m[2] +
                  std::conj(a.m[1]) * b.m[1] + std::conj(a.m[3]) * b.m[3];
    return std::abs(std::abs(tr) - 2.0) < 1e-9;
}

struct PrimitiveSpec {
    PulsePrimitive primitive;
    double axis_phase;
    double angle;
};

constexpr double kHalfPi = kPi / 2.0;

const PrimitiveSpec kGenerators[] = {
    {PulsePrimitive::X90, 0.0, kHalfPi},     {PulsePrimitive::Xm90, kPi, kHalfPi},
    {PulsePrimitive::X180, 0.0, kPi},        {PulsePrimitive::Y90, kHalfPi, kHalfPi},
    {PulsePrimitive::Ym90, -kHalfPi, kHalfPi}, {PulsePrimitive::Y180, kHalfPi, kPi},
};

PrimitiveSpec primitive_spec(PulsePrimitive p) {
    for (const PrimitiveSpec& g : kGenerators)
        if (g.primitive == p) return g;
    return {PulsePrimitive::Idle, 0.0, 0.0};
}

}  // namespace

Mat2 Mat2::operator*(const Mat2& o) const {
    Mat2 r;
    r.m[0] = m[0] * o.m[0] + m[1] * o.m[2];
    r.m[1] = m[0] * o.m[1] + m[1] * o.m[3];
    r.m[2] = m[2] * o.m[0] + m[3] * o.m[2];
    r.m[3] = m[2] * o.m[1] + m[3] * o.m[3];
    return r;
}

CliffordGroup::CliffordGroup() {
    // Breadth-first closure of {X+-90, Y+-90, X180, Y180} starting from the
    // identity gives every element a shortest decomposition; the generator
    // order above makes the table deterministic.
    Mat2 identity;
    identity.m = {cd{1.0, 0.0}, cd{0.0, 0.0}, cd{0.0, 0.0}, cd{1.0, 0.0}};
    matrices_.push_back(identity);
    decompositions_.push_back({PulsePrimitive::Idle});  // one idle slot

    size_t cursor = 0;
    while (cursor < matrices_.size() && matrices_.size() < size) {
        const Mat2 base = matrices_[cursor];
        const std::vector<PulsePrimitive> base_decomp =
            cursor == 0 ? std::vector<PulsePrimitive>{} : decompositions_[cursor];
        for (const PrimitiveSpec& g : kGenerators) {
            const Mat2 candidate = rotation(g.axis_phase, g.angle) * base;
            bool known = false;
            for (const Mat2& m : matrices_)
                if (same_rotation(m, candidate)) {
                    known = true;
                    break;
                }
            if (known) continue;
            matrices_.push_back(candidate);
            std::vector<PulsePrimitive> decomp = base_decomp;
            decomp.push_back(g.primitive);
            decompositions_.push_back(std::move(decomp));
            if (matrices_.size() == size) break;
        }
        ++cursor;
    }
    if (matrices_.size() != size)
        throw std::logic_error("Clifford closure did not reach 24 elements");

    compose_.assign(size * size, -1);
    inverse_.assign(size, -1);
    for (int a = 0; a < size; ++a) {
        for (int b = 0; b < size; ++b) {
            const Mat2 prod = matrices_[static_cast<size_t>(a)] * matrices_[static_cast<size_t>(b)];
            for (int k = 0; k < size; ++k)
                if (same_rotation(prod, matrices_[static_cast<size_t>(k)])) {
                    compose_[a * size + b] = k;
                    break;
                }
            if (compose_[a * size + b] < 0)
                throw std::logic_error("Clifford composition fell outside the group");
            if (compose_[a * size + b] == 0) {
                inverse_[a] = b;
            }
        }
    }
}

const CliffordGroup& CliffordGroup::instance() {
    static const CliffordGroup group;
    return group;
}

const std::vector<PulsePrimitive>& CliffordGroup::decomposition(int element) const {
    return decompositions_[static_cast<size_t>(element)];
}

double CliffordGroup::average_pulses() const {
    size_t total = 0;
    for (const auto& d : decompositions_) total += d.size();
    return static_cast<double>(total) / size;
}

std::vector<int> sample_clifford_sequence(int m, RngStream& rng) {
    if (m < 1) throw ValidationError("sample_clifford_sequence: m must be >= 1");
    const CliffordGroup& group = CliffordGroup::instance();
    std::vector<int> sequence(static_cast<size_t>(m) + 1);
    int product = 0;  // identity
    for (int k = 0; k < m; ++k) {
        const int c = static_cast<int>(rng.uniform_int(CliffordGroup::size));
        sequence[static_cast<size_t>(k)] = c;
        product = group.compose(c, product);
    }
    sequence[static_cast<size_t>(m)] = group.inverse(product);
    return sequence;
}

std::string to_string(RBMode mode) {
    switch (mode) {
        case RBMode::separate: return "separate";
        case RBMode::simultaneous_raw: return "simultaneous_raw";
        case RBMode::simultaneous_compensated: return "simultaneous_compensated";
    }
    return "?";
}

namespace {

constexpr std::uint64_t kRbDomain = 0x72623137ULL;

double pulse_amplitude(double angle, double rabi_scale_mhz, double gate_ns) {
    // Cosine envelope of peak A integrates to A * gate/2; the rotation angle
    // is 2 pi * rabi * integral.
    return angle / (kTwoPi * rabi_scale_mhz * 1e-3 * 0.5 * gate_ns);
}

struct CompiledClifford {
    std::vector<TimedPulse> pulses;  // relative to slot origin, one per slot
};

CompiledClifford compile_clifford(int element, double rabi_scale_mhz, double gate_ns) {
    const CliffordGroup& group = CliffordGroup::instance();
    CompiledClifford out;
    for (PulsePrimitive p : group.decomposition(element)) {
        TimedPulse pulse;
        pulse.start_ns = static_cast<double>(out.pulses.size()) * gate_ns;
        if (p == PulsePrimitive::Idle) {
            pulse.amplitude = 0.0;
        } else {
            const PrimitiveSpec spec = primitive_spec(p);
            pulse.amplitude = pulse_amplitude(spec.angle, rabi_scale_mhz, gate_ns);
            pulse.phase_rad = spec.axis_phase;
        }
        out.pulses.push_back(pulse);
    }
    return out;
}

double auto_dt(std::span<const ResolvedTone> tones, const QubitSpec& qubit, double max_dt_ns) {
    double dt = max_dt_ns;
    for (const ResolvedTone& t : tones) {
        const double delta = std::abs(qubit.frequency_ghz - t.carrier_ghz);
        const double omega = qubit.rabi_scale_mhz * 1e-3 * t.envelope.amplitude;
        const double fastest = std::max(delta, omega);
        if (fastest > 0.0) dt = std::min(dt, 0.05 / (kTwoPi * fastest));
    }
    return dt;
}

struct SequenceJob {
    int qubit_slot;   // index into the qubits span
    int length_slot;
    int sequence_index;
};

}  // namespace

std::vector<RBResult> run_rb_collect(const DeviceModel& device, std::span<const int> qubits,
                                     RBMode mode, const RBConfig& config,
                                     const CompensationMap* comp,
                                     std::vector<RBRawRecord>* raw_records) {
    if (qubits.empty()) throw ValidationError("run_rb: no qubits selected");
    for (int q : qubits)
        if (!device.valid_id(q)) throw ValidationError("run_rb: invalid qubit id");
    if (config.lengths.size() < 1) throw ValidationError("run_rb: no sequence lengths");
    for (size_t i = 0; i + 1 < config.lengths.size(); ++i)
        if (config.lengths[i] >= config.lengths[i + 1])
            throw ValidationError("run_rb: lengths must be strictly increasing");
    if (config.lengths.front() < 1) throw ValidationError("run_rb: lengths must be >= 1");
    if (config.sequences_per_length < 1)
        throw ValidationError("run_rb: sequences_per_length must be >= 1");
    if (mode == RBMode::simultaneous_compensated && (!comp || comp->empty()))
        throw ValidationError("run_rb: compensated mode requires a compensation table");

    const bool simultaneous = mode != RBMode::separate;
    const CompensationMap* active_comp =
        mode == RBMode::simultaneous_compensated ? comp : nullptr;
    const int nq = static_cast<int>(qubits.size());
    const int nl = static_cast<int>(config.lengths.size());
    const int ns = config.sequences_per_length;

    // survival[q][l][s]
    std::vector<std::vector<std::vector<double>>> survival(
        static_cast<size_t>(nq),
        std::vector<std::vector<double>>(static_cast<size_t>(nl),
                                         std::vector<double>(static_cast<size_t>(ns), 0.0)));

    // Clifford draws are keyed by (qubit, length, sequence) only, never by
    // mode, so separate/raw/compensated comparisons are paired per sequence.
    auto stream_for = [&](int qubit_id, int length_slot, int seq_index) {
        const std::uint64_t key = (static_cast<std::uint64_t>(qubit_id) << 32) ^
                                  (static_cast<std::uint64_t>(length_slot) << 16) ^
                                  static_cast<std::uint64_t>(seq_index);
        return RngStream::child(device.rng_seed, kRbDomain, key);
    };

    auto survival_from_state = [&](const QubitState& psi, int m, RngStream& rng) {
        const double p_ground = 1.0 - psi.excited_population();
        const double contraction =
            std::pow(1.0 - config.gate_depol, static_cast<double>(m) + 1.0);
        double p = 0.5 + contraction * (p_ground - 0.5);
        p = p * (1.0 - device.spam_error) + (1.0 - p) * device.spam_error;
        return static_cast<double>(rng.binomial(config.shots, p)) /
               static_cast<double>(config.shots);
    };

    if (simultaneous) {
        // One shared timeline per (length, sequence): every selected qubit
        // plays its own random sequence, slots padded to the widest Clifford.
        std::vector<SequenceJob> jobs;
        for (int li = 0; li < nl; ++li)
            for (int s = 0; s < ns; ++s) jobs.push_back({0, li, s});

        parallel_for(static_cast<int>(jobs.size()), [&](int ji) {
            const SequenceJob job = jobs[static_cast<size_t>(ji)];
            const int m = config.lengths[static_cast<size_t>(job.length_slot)];

            std::vector<RngStream> streams;
            std::vector<std::vector<int>> cliffords(static_cast<size_t>(nq));
            streams.reserve(static_cast<size_t>(nq));
            for (int qi = 0; qi < nq; ++qi) {
                streams.push_back(
                    stream_for(qubits[static_cast<size_t>(qi)], job.length_slot,
                               job.sequence_index));
                cliffords[static_cast<size_t>(qi)] =
                    sample_clifford_sequence(m, streams.back());
            }

            std::vector<CompiledClifford> compiled(static_cast<size_t>(nq));
            std::vector<GateTrain> trains(static_cast<size_t>(device.qubit_count()));
            double slot_origin_ns = 0.0;
            for (int k = 0; k <= m; ++k) {
                size_t width = 0;
                for (int qi = 0; qi < nq; ++qi) {
                    const int q = qubits[static_cast<size_t>(qi)];
                    compiled[static_cast<size_t>(qi)] = compile_clifford(
                        cliffords[static_cast<size_t>(qi)][static_cast<size_t>(k)],
                        device.qubit(q).rabi_scale_mhz, config.gate_ns);
                    width = std::max(width,
                                     compiled[static_cast<size_t>(qi)].pulses.size());
                }
                for (int qi = 0; qi < nq; ++qi) {
                    const int q = qubits[static_cast<size_t>(qi)];
                    GateTrain& train = trains[static_cast<size_t>(q)];
                    const auto& pulses = compiled[static_cast<size_t>(qi)].pulses;
                    for (size_t slot = 0; slot < width; ++slot) {
                        TimedPulse pulse =
                            slot < pulses.size() ? pulses[slot] : TimedPulse{};
                        pulse.start_ns =
                            slot_origin_ns + static_cast<double>(slot) * config.gate_ns;
                        train.push_back(pulse);
                    }
                }
                slot_origin_ns += static_cast<double>(width) * config.gate_ns;
            }

            const Sequence seq =
                build_rb_sequence(trains, device, active_comp, config.gate_ns);
            for (int qi = 0; qi < nq; ++qi) {
                const int q = qubits[static_cast<size_t>(qi)];
                const std::vector<ResolvedTone> tones = resolve_qubit_drive(seq, q, device);
                SimOptions opts;
                opts.dt_ns = auto_dt(tones, device.qubit(q), config.max_dt_ns);
                opts.shots = config.shots;
                const QubitState psi =
                    simulate(tones, device.qubit(q), seq.duration_ns, {}, opts);
                survival[static_cast<size_t>(qi)][static_cast<size_t>(job.length_slot)]
                        [static_cast<size_t>(job.sequence_index)] =
                            survival_from_state(psi, m, streams[static_cast<size_t>(qi)]);
            }
        });
    } else {
        std::vector<SequenceJob> jobs;
        for (int qi = 0; qi < nq; ++qi)
            for (int li = 0; li < nl; ++li)
                for (int s = 0; s < ns; ++s) jobs.push_back({qi, li, s});

        parallel_for(static_cast<int>(jobs.size()), [&](int ji) {
            const SequenceJob job = jobs[static_cast<size_t>(ji)];
            const int q = qubits[static_cast<size_t>(job.qubit_slot)];
            const int m = config.lengths[static_cast<size_t>(job.length_slot)];
            RngStream rng = stream_for(q, job.length_slot, job.sequence_index);
            const std::vector<int> cliffords = sample_clifford_sequence(m, rng);

            std::vector<GateTrain> trains(static_cast<size_t>(device.qubit_count()));
            GateTrain& train = trains[static_cast<size_t>(q)];
            double origin = 0.0;
            for (int element : cliffords) {
                const CompiledClifford cc =
                    compile_clifford(element, device.qubit(q).rabi_scale_mhz, config.gate_ns);
                for (TimedPulse pulse : cc.pulses) {
                    pulse.start_ns += origin;
                    train.push_back(pulse);
                }
                origin += static_cast<double>(cc.pulses.size()) * config.gate_ns;
            }

            const Sequence seq = build_rb_sequence(trains, device, nullptr, config.gate_ns);
            const std::vector<ResolvedTone> tones = resolve_qubit_drive(seq, q, device);
            SimOptions opts;
            opts.dt_ns = auto_dt(tones, device.qubit(q), config.max_dt_ns);
            opts.shots = config.shots;
            const QubitState psi = simulate(tones, device.qubit(q), seq.duration_ns, {}, opts);
            survival[static_cast<size_t>(job.qubit_slot)][static_cast<size_t>(job.length_slot)]
                    [static_cast<size_t>(job.sequence_index)] =
                        survival_from_state(psi, m, rng);
        });
    }

    std::vector<RBResult> results;
    for (int qi = 0; qi < nq; ++qi) {
        RBResult r;
        r.qubit = qubits[static_cast<size_t>(qi)];
        r.mode = mode;
        r.lengths = config.lengths;
        for (int li = 0; li < nl; ++li) {
            const auto& per_seq = survival[static_cast<size_t>(qi)][static_cast<size_t>(li)];
            double mean = 0.0;
            for (double v : per_seq) mean += v;
            mean /= static_cast<double>(ns);
            double var = 0.0;
            for (double v : per_seq) var += (v - mean) * (v - mean);
            var = ns > 1 ? var / (static_cast<double>(ns) * (ns - 1)) : 0.0;
            r.survival.push_back(mean);
            r.survival_var.push_back(var);
            if (raw_records)
                for (int s = 0; s < ns; ++s)
                    raw_records->push_back({mode, r.qubit,
                                            config.lengths[static_cast<size_t>(li)], s,
                                            per_seq[static_cast<size_t>(s)]});
        }
        const RBDecayFit fit = fit_rb_decay(r.lengths, r.survival, r.survival_var);
        r.p = fit.p;
        r.epg = fit.epg;
        r.fit_ci = fit.fit_ci;
        results.push_back(std::move(r));
    }
    return results;
}

std::vector<RBResult> run_rb(const DeviceModel& device, std::span<const int> qubits,
                             RBMode mode, const RBConfig& config, const CompensationMap* comp) {
    return run_rb_collect(device, qubits, mode, config, comp, nullptr);
}

RBDecayFit fit_rb_decay(std::span<const int> lengths, std::span<const double> survival,
                        std::span<const double> variance) {
    if (lengths.size() < 4) throw ValidationError("fit_rb_decay: need at least 4 lengths");
    if (survival.size() != lengths.size() ||
        (!variance.empty() && variance.size() != lengths.size()))
        throw ValidationError("fit_rb_decay: mismatched spans");

    const size_t n = lengths.size();
    std::vector<double> weights(n, 1.0);
    if (!variance.empty()) {
        double vmax = 0.0;
        for (double v : variance) vmax = std::max(vmax, v);
        if (vmax > 0.0)
            for (size_t i = 0; i < n; ++i)
                weights[i] = 1.0 / std::max(variance[i], 1e-4 * vmax);
    }

    // Profile (A, B) out: for a trial p the model is linear. B stays within
    // [0.25, 0.75] (the depolarized baseline 1/2 distorted by SPAM at most).
    auto sse_at = [&](double p, double* a_out = nullptr, double* b_out = nullptr) {
        double sww = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double x = std::pow(p, static_cast<double>(lengths[i]));
            const double w = weights[i];
            sww += w;
            swx += w * x;
            swy += w * survival[i];
            swxx += w * x * x;
            swxy += w * x * survival[i];
        }
        const double det = sww * swxx - swx * swx;
        double a, b;
        if (std::abs(det) < 1e-14 * sww * sww) {
            a = 0.0;
            b = swy / sww;
        } else {
            a = (sww * swxy - swx * swy) / det;
            b = (swy - a * swx) / sww;
        }
        if (b < 0.25 || b > 0.75) {
            b = std::clamp(b, 0.25, 0.75);
            a = swxx > 0.0 ? (swxy - b * swx) / swxx : 0.0;
        }
        double sse = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double model = a * std::pow(p, static_cast<double>(lengths[i])) + b;
            const double r = survival[i] - model;
            sse += weights[i] * r * r;
        }
        if (a_out) *a_out = a;
        if (b_out) *b_out = b;
        return sse;
    };

    double best_p = 1.0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (double p = 0.30; p <= 1.0 + 1e-12; p += 0.002) {
        const double sse = sse_at(std::min(p, 1.0));
        if (sse < best_sse) {
            best_sse = sse;
            best_p = std::min(p, 1.0);
        }
    }
    if (best_p <= 0.302)
        throw FitError("fit_rb_decay: decay parameter at the search floor; data do not "
                       "follow A p^m + B");

    constexpr double kInvPhi = 0.6180339887498949;
    double lo = std::max(0.30, best_p - 0.002), hi = std::min(1.0, best_p + 0.002);
    for (int it = 0; it < 60; ++it) {
        const double c = hi - kInvPhi * (hi - lo);
        const double d = lo + kInvPhi * (hi - lo);
        if (sse_at(c) < sse_at(d))
            hi = d;
        else
            lo = c;
    }
    best_p = std::clamp(0.5 * (lo + hi), 1e-6, 1.0);

    RBDecayFit fit;
    best_sse = sse_at(best_p, &fit.a, &fit.b);
    fit.p = best_p;
    fit.epg = 0.5 * (1.0 - best_p);

    const double step = 1e-4;
    const double pl = std::max(0.30, best_p - step);
    const double ph = std::min(1.0, best_p + step);
    const double curvature =
        (sse_at(ph) - 2.0 * best_sse + sse_at(pl)) / (0.25 * (ph - pl) * (ph - pl));
    const double dof = std::max(static_cast<double>(n) - 3.0, 1.0);
    // Weighted fits sit in chi-square units (inflated by the reduced chi2 if
    // the model misfits); unweighted fits estimate the noise from residuals.
    // fit_ci is the 95% half-width on the error per gate: 1.96 sigma_p / 2.
    const double sigma_scale =
        variance.empty() ? best_sse / dof : std::max(1.0, best_sse / dof);
    fit.fit_ci = curvature > 0.0 ? 0.98 * std::sqrt(2.0 * sigma_scale / curvature) : 0.5;
    return fit;
}

std::optional<double> crosstalk_error_reduction(double separate_epg, double raw_epg,
                                                double comp_epg) {
    const double excess = raw_epg - separate_epg;
    if (excess <= 0.0) return std::nullopt;
    return 100.0 * (raw_epg - comp_epg) / excess;
}

}  // namespace xtalk

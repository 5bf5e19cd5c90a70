#include "frontlab/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "frontlab/errors.hpp"
#include "frontlab/rng.hpp"

namespace frontlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTPrimeStep = 5e-4;

double constraint_value(double t_prime, double a, double b) {
    const double s_star = t_prime - std::sqrt(b / a);
    if (s_star > 0.0) return t_prime * (1.0 + a) - 2.0 * std::sqrt(a * b);
    return t_prime - b / t_prime;
}

// Feasible window and chosen t' at a fixed delta1; t_prime = 0 marks an
// empty window.
FeasibleParameters derive_parameters(double ei, double es, double delta1) {
    FeasibleParameters p;
    p.a = (es - ei) / ei;
    p.delta1 = delta1;
    p.b1 = (1.0 + 4.0 * delta1) * (1.0 + 4.0 * delta1);
    p.b2 = (1.0 + 2.0 * delta1) * (1.0 + 2.0 * delta1);
    p.t_lower = 2.0 * std::sqrt(p.a * p.b2) / (1.0 + p.a);
    p.t_upper = std::min(2.0 * std::sqrt(p.a * p.b1) / (1.0 + p.a), 1.0 - 5.0 * delta1);
    if (p.t_lower >= p.t_upper) return p;

    double t = std::ceil(p.t_lower / kTPrimeStep) * kTPrimeStep;
    while (t <= p.t_lower + 1e-12) t += kTPrimeStep;
    if (t >= p.t_upper) return p;

    p.t_prime = t;
    p.negsup = constraint_value(t, p.a, p.b1);
    p.possup = constraint_value(t, p.a, p.b2);

    // Largest es haircut that keeps the positive constraint alive, halved:
    // with a2 = (es(1-d2) - ei)/ei the constraint stays >= 0 down to the
    // outer root of t q^2 - 2 sqrt(b2) q + t in q = sqrt(a2).
    const double disc = p.b2 - t * t;
    if (disc > 0.0) {
        const double q_hi = (std::sqrt(p.b2) + std::sqrt(disc)) / t;
        const double a2_min = q_hi * q_hi;
        const double d2_max = 1.0 - ei * (1.0 + a2_min) / es;
        p.delta2 = std::max(0.0, d2_max) / 2.0;
    }
    return p;
}

}

FeasibleParameters select_parameters(double ei, double es, double delta1) {
    if (!(ei > 0.0) || !(es > ei)) throw ConfigError("select_parameters needs 0 < ei < es");
    if (!(delta1 > 0.0) || delta1 > 0.2)
        throw ConfigError("select_parameters needs delta1 in (0, 0.2]");
    if ((es - ei) / ei <= 1.0 + 1e-12)
        throw DomainError("coupling infeasible: (es-ei)/ei <= 1, needs es > 2 ei");
    FeasibleParameters p = derive_parameters(ei, es, delta1);
    if (p.t_prime == 0.0)
        throw DomainError("no feasible t' window at delta1 = " + std::to_string(delta1));
    return p;
}

FeasibleParameters select_parameters(double ei, double es) {
    if (!(ei > 0.0) || !(es > ei)) throw ConfigError("select_parameters needs 0 < ei < es");
    if ((es - ei) / ei <= 1.0 + 1e-12)
        throw DomainError("coupling infeasible: (es-ei)/ei <= 1, needs es > 2 ei");
    FeasibleParameters best;
    double best_margin = -kInf;
    for (int i = 1; i <= 100; ++i) {
        const double delta1 = 5e-4 * i;
        const FeasibleParameters p = derive_parameters(ei, es, delta1);
        if (p.t_prime == 0.0) continue;
        const double margin = -p.negsup;
        if (margin > best_margin) {
            best_margin = margin;
            best = p;
        }
    }
    if (best.t_prime == 0.0)
        throw DomainError("no feasible (delta1, t') for ei = " + std::to_string(ei) +
                          ", es = " + std::to_string(es));
    return best;
}

CouplingConfig make_coupling_config(const FeasibleParameters& params, double ei, double es,
                                    double x_n, double phi, double dt, std::size_t cap) {
    if (!(phi > 0.0)) throw ConfigError("coupling needs phi > 0");
    CouplingConfig c;
    c.ei = ei;
    c.es = es;
    c.x_n = x_n;
    c.phi = phi;
    c.delta1 = params.delta1;
    c.t_prime = params.t_prime;
    c.l = x_n - 4.5 * params.delta1 * phi;
    c.r = x_n + 1.5 * params.delta1 * phi;
    c.m = 0.5 * (c.l + c.r);
    c.big_l = x_n - phi;
    c.big_r = 2.0 * c.m - c.big_l;
    c.dt = dt;
    c.t_check = params.t_prime * phi / std::sqrt(2.0 * ei);
    c.t_final = 2.0 * c.t_check;
    c.cap = cap;
    return c;
}

// ------------------------------------------------------------- run_coupling

namespace {

struct Body {
    std::uint64_t id = 0;
    std::uint64_t partner = 0;
    double pos = 0.0;
    double prev = 0.0;
    ParticleTag tag = ParticleTag::lm;
};

struct CrossEvent {
    double frac;
    int kind;  // 0: hit L, 1: hit m, 2: meet free
    std::size_t left_ix;
    std::size_t free_ix;
};

void validate_config(const CouplingConfig& c, const Potential& pot) {
    if (!(c.ei > 0.0) || !(c.es > c.ei)) throw ConfigError("coupling needs 0 < ei < es");
    if (!(c.dt > 0.0) || !(c.t_check > 0.0) || !(c.trace_dt > 0.0))
        throw ConfigError("coupling needs positive dt, t_check, trace_dt");
    if (c.cap < 2) throw ConfigError("coupling cap must allow at least two particles");
    if (!(c.big_l < c.l && c.l < c.m && c.m < c.r && c.r < c.big_r))
        throw ConfigError("coupling geometry must satisfy L < l < m < r < R");
    if (std::abs(c.m - 0.5 * (c.l + c.r)) > 1e-9)
        throw ConfigError("coupling midpoint m must equal (l+r)/2");
    const double d1phi = c.delta1 * c.phi;
    if (!(d1phi > 0.0)) throw ConfigError("coupling needs delta1 * phi > 0");
    if (c.l < c.x_n - 5.0 * d1phi - 1e-9 || c.l > c.x_n - 4.0 * d1phi + 1e-9)
        throw ConfigError("l outside [x_n - 5 d1 phi, x_n - 4 d1 phi]");
    if (c.r < c.x_n + d1phi - 1e-9 || c.r > c.x_n + 2.0 * d1phi + 1e-9)
        throw ConfigError("r outside [x_n + d1 phi, x_n + 2 d1 phi]");

    // the extra-branching bound needs xi non-decreasing across [L, R]
    const int n_grid = 2000;
    double prev = -kInf;
    for (int i = 0; i <= n_grid; ++i) {
        const double x = c.big_l + (c.big_r - c.big_l) * i / n_grid;
        const double v = pot.value(x);
        if (v < prev - 1e-9)
            throw PreconditionError("potential not non-decreasing on [L, R] at x = " +
                                    std::to_string(x));
        if (v < c.ei - 1e-9 || v > c.es + 1e-9)
            throw PreconditionError("potential leaves [ei, es] on [L, R]");
        prev = v;
    }
}

}

CouplingOutcome run_coupling(const CouplingConfig& c, const Potential& pot,
                             const OffspringDistribution& dist, std::uint64_t seed) {
    validate_config(c, pot);

    const auto steps_check = static_cast<std::size_t>(
        std::max(1.0, std::round(c.t_check / c.dt)));
    const double dt = c.t_check / static_cast<double>(steps_check);
    const double t_final = (c.t_final > 0.0) ? c.t_final : 2.0 * c.t_check;
    if (t_final < c.t_check - 1e-12) throw ConfigError("t_final must reach t_check");
    const auto steps_total =
        std::max(steps_check, static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9)));
    const auto trace_every =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::round(c.trace_dt / dt)));

    Rng rng(seed, 0);
    const double sqdt = std::sqrt(dt);
    const double p_es = -std::expm1(-c.es * dt);
    const double gap = c.es - c.ei;
    const double p_gap = (gap > 0.0) ? -std::expm1(-gap * dt) : 0.0;

    std::vector<Body> left, right;
    std::unordered_map<std::uint64_t, std::size_t> right_ix;
    std::uint64_t next_id = 1;

    auto push_right = [&](Body b) {
        right_ix[b.id] = right.size();
        right.push_back(b);
    };

    {
        Body lm{next_id++, 0, c.l, c.l, ParticleTag::lm};
        Body rm{next_id++, lm.id, c.r, c.r, ParticleTag::rm};
        lm.partner = rm.id;
        left.push_back(lm);
        push_right(rm);
    }

    std::size_t n_lm = 1, n_bad = 0;
    CouplingOutcome out;
    out.success_window = true;
    double run_min_left = c.l;

    auto snapshot = [&](double t) {
        CouplingSnapshot s;
        s.t = t;
        s.run_min_left = run_min_left;
        s.max_lm = -kInf;
        s.min_free = kInf;
        s.min_right = kInf;
        for (const auto& b : left) {
            switch (b.tag) {
                case ParticleTag::lm:
                    ++s.n_lm;
                    s.max_lm = std::max(s.max_lm, b.pos);
                    break;
                case ParticleTag::lc: ++s.n_lc; break;
                default: ++s.n_bad; break;
            }
            if (b.tag == ParticleTag::lm || b.tag == ParticleTag::lc) {
                const auto& p = right[right_ix.at(b.partner)];
                if (b.tag == ParticleTag::lm)
                    s.mirror_drift =
                        std::max(s.mirror_drift, std::abs(p.pos - (2.0 * c.m - b.pos)));
                else
                    s.coloc_drift = std::max(s.coloc_drift, std::abs(p.pos - b.pos));
            }
        }
        for (const auto& b : right) {
            switch (b.tag) {
                case ParticleTag::rm: ++s.n_rm; break;
                case ParticleTag::rc: ++s.n_rc; break;
                default:
                    ++s.n_free;
                    s.min_free = std::min(s.min_free, b.pos);
                    break;
            }
            s.min_right = std::min(s.min_right, b.pos);
        }
        if (s.max_lm > s.min_free + 1e-12) ++out.tau_violations;
        out.max_bad = std::max(out.max_bad, s.n_bad);
        out.trace.push_back(s);
    };

    auto finalize = [&](double t) {
        out.end_time = t;
        out.left_final.reserve(left.size());
        for (const auto& b : left)
            out.left_final.push_back(TypedParticle{b.id, b.pos, b.tag, b.partner});
        out.right_final.reserve(right.size());
        for (const auto& b : right)
            out.right_final.push_back(TypedParticle{b.id, b.pos, b.tag, b.partner});
    };

    snapshot(0.0);

    for (std::size_t step = 1; step <= steps_total; ++step) {
        const double t_now = dt * static_cast<double>(step);

        // (i) increments: LM/RM negated-common, LC/RC common, Bad/Free own
        for (auto& b : left) {
            b.prev = b.pos;
            b.pos += sqdt * rng.normal();
            if (b.tag == ParticleTag::lm) {
                Body& p = right[right_ix.at(b.partner)];
                p.prev = p.pos;
                p.pos = 2.0 * c.m - b.pos;
            } else if (b.tag == ParticleTag::lc) {
                Body& p = right[right_ix.at(b.partner)];
                p.prev = p.pos;
                p.pos = b.pos;
            }
            run_min_left = std::min(run_min_left, b.pos);
        }
        for (auto& b : right) {
            if (b.tag == ParticleTag::free_right) {
                b.prev = b.pos;
                b.pos += sqdt * rng.normal();
            }
        }

        // (ii) left branching, replicated onto partners with the same count
        const std::size_t n_left0 = left.size();
        const std::size_t n_right0 = right.size();
        bool capped = false;
        for (std::size_t i = 0; i < n_left0 && !capped; ++i) {
            if (rng.uniform() >= p_es) continue;
            if (rng.uniform() * c.es >= pot.value(left[i].pos)) continue;
            const int k = sample_offspring(dist, rng);
            const ParticleTag tag = left[i].tag;
            const double y = left[i].pos;
            for (int child = 1; child < k; ++child) {
                if (tag == ParticleTag::bad) {
                    left.push_back(Body{next_id++, 0, y, y, ParticleTag::bad});
                } else {
                    Body lchild{next_id++, 0, y, y, tag};
                    const bool mirrored = (tag == ParticleTag::lm);
                    const double ypartner = mirrored ? 2.0 * c.m - y : y;
                    Body rchild{next_id++, lchild.id, ypartner, ypartner,
                                mirrored ? ParticleTag::rm : ParticleTag::rc};
                    lchild.partner = rchild.id;
                    left.push_back(lchild);
                    push_right(rchild);
                    if (mirrored) ++n_lm;
                }
                if (tag == ParticleTag::bad) ++n_bad;
                if (left.size() + right.size() > c.cap) {
                    capped = true;
                    break;
                }
            }
        }

        // (iii) RM extra branching at rate xi(Y') - xi(2m - Y'), one child
        // keeps the link; (iv) Free branching at rate xi
        for (std::size_t j = 0; j < n_right0 && !capped; ++j) {
            const ParticleTag tag = right[j].tag;
            if (tag == ParticleTag::rm) {
                if (p_gap <= 0.0 || rng.uniform() >= p_gap) continue;
                const double y = right[j].pos;
                const double rate = pot.value(y) - pot.value(2.0 * c.m - y);
                if (rng.uniform() * gap >= rate) continue;
                const int k = sample_offspring(dist, rng);
                for (int child = 1; child < k; ++child) {
                    push_right(Body{next_id++, 0, y, y, ParticleTag::free_right});
                    if (left.size() + right.size() > c.cap) {
                        capped = true;
                        break;
                    }
                }
            } else if (tag == ParticleTag::free_right) {
                if (rng.uniform() >= p_es) continue;
                const double y = right[j].pos;
                if (rng.uniform() * c.es >= pot.value(y)) continue;
                const int k = sample_offspring(dist, rng);
                for (int child = 1; child < k; ++child) {
                    push_right(Body{next_id++, 0, y, y, ParticleTag::free_right});
                    if (left.size() + right.size() > c.cap) {
                        capped = true;
                        break;
                    }
                }
            }
        }

        if (capped) {
            out.capped = true;
            snapshot(t_now);
            finalize(t_now);
            return out;
        }

        // (v) type changes at interpolated crossings, earliest first
        double max_lm_hi = -kInf;
        for (const auto& b : left)
            if (b.tag == ParticleTag::lm) max_lm_hi = std::max(max_lm_hi, std::max(b.prev, b.pos));
        std::vector<std::size_t> free_cand;
        if (max_lm_hi > -kInf) {
            for (std::size_t j = 0; j < right.size(); ++j)
                if (right[j].tag == ParticleTag::free_right &&
                    std::min(right[j].prev, right[j].pos) <= max_lm_hi)
                    free_cand.push_back(j);
        }

        std::vector<CrossEvent> events;
        for (std::size_t i = 0; i < left.size(); ++i) {
            if (left[i].tag != ParticleTag::lm) continue;
            const double y0 = left[i].prev;
            const double y1 = left[i].pos;
            if (y1 <= c.big_l) {
                const double frac = (y0 > y1) ? std::clamp((y0 - c.big_l) / (y0 - y1), 0.0, 1.0)
                                              : 0.0;
                events.push_back(CrossEvent{frac, 0, i, 0});
            }
            if (y1 >= c.m) {
                const double frac = (y1 > y0) ? std::clamp((c.m - y0) / (y1 - y0), 0.0, 1.0)
                                              : 0.0;
                events.push_back(CrossEvent{frac, 1, i, 0});
            }
            for (std::size_t j : free_cand) {
                const double g0 = y0 - right[j].prev;
                const double g1 = y1 - right[j].pos;
                if ((g0 <= 0.0 && g1 >= 0.0) || (g0 >= 0.0 && g1 <= 0.0)) {
                    const double frac =
                        (g0 != g1) ? std::clamp(g0 / (g0 - g1), 0.0, 1.0) : 0.0;
                    events.push_back(CrossEvent{frac, 2, i, j});
                }
            }
        }
        std::sort(events.begin(), events.end(), [](const CrossEvent& a, const CrossEvent& b) {
            if (a.frac != b.frac) return a.frac < b.frac;
            if (a.kind != b.kind) return a.kind < b.kind;
            if (a.left_ix != b.left_ix) return a.left_ix < b.left_ix;
            return a.free_ix < b.free_ix;
        });

        auto lm_to_lc = [&](std::size_t i, std::size_t rc_ix) {
            Body& lm = left[i];
            Body& rc = right[rc_ix];
            lm.tag = ParticleTag::lc;
            lm.partner = rc.id;
            rc.tag = ParticleTag::rc;
            rc.partner = lm.id;
            rc.pos = lm.pos;
            --n_lm;
        };
        auto lm_to_bad = [&](std::size_t i) {
            Body& lm = left[i];
            Body& p = right[right_ix.at(lm.partner)];
            p.tag = ParticleTag::free_right;
            p.partner = 0;
            lm.tag = ParticleTag::bad;
            lm.partner = 0;
            --n_lm;
            ++n_bad;
        };

        for (const auto& ev : events) {
            if (left[ev.left_ix].tag != ParticleTag::lm) continue;  // stale
            if (ev.kind == 0) {
                lm_to_bad(ev.left_ix);
            } else if (ev.kind == 1) {
                const std::size_t p_ix = right_ix.at(left[ev.left_ix].partner);
                lm_to_lc(ev.left_ix, p_ix);
            } else {
                if (right[ev.free_ix].tag != ParticleTag::free_right) continue;  // stale
                const std::size_t old_ix = right_ix.at(left[ev.left_ix].partner);
                right[old_ix].tag = ParticleTag::free_right;
                right[old_ix].partner = 0;
                lm_to_lc(ev.left_ix, ev.free_ix);
            }
        }
        // endpoint enforcement: any LM still out of (L, m) converts in place
        for (std::size_t i = 0; i < left.size(); ++i) {
            if (left[i].tag != ParticleTag::lm) continue;
            if (left[i].pos <= c.big_l) {
                lm_to_bad(i);
            } else if (left[i].pos >= c.m) {
                lm_to_lc(i, right_ix.at(left[i].partner));
            }
        }

        if (step == steps_check) {
            out.reached_t_check = true;
            out.g1 = run_min_left > c.big_l;
            double min_right = kInf;
            for (const auto& b : right) min_right = std::min(min_right, b.pos);
            out.g2 = min_right <= c.big_l;
            out.n_lm_check = n_lm;
            out.n_bad_check = n_bad;
            out.success = (n_lm == 0 && n_bad == 0);
        }
        if (step >= steps_check && (n_lm != 0 || n_bad != 0)) out.success_window = false;

        if (step % trace_every == 0 || step == steps_check || step == steps_total)
            snapshot(t_now);
    }

    out.window_complete = true;
    finalize(dt * static_cast<double>(steps_total));
    return out;
}

std::pair<bool, bool> check_good_events(const CouplingOutcome& outcome,
                                        const CouplingConfig& config) {
    const CouplingSnapshot* at_check = nullptr;
    for (const auto& s : outcome.trace) {
        if (s.t <= config.t_check + 1e-9) at_check = &s;
        if (s.t >= config.t_check - 1e-9) break;
    }
    if (at_check == nullptr || std::abs(at_check->t - config.t_check) > config.dt + 1e-9)
        throw PreconditionError("trace does not cover t_check");
    const bool g1 = at_check->run_min_left > config.big_l;
    const bool g2 = at_check->min_right <= config.big_l;
    return {g1, g2};
}

bool verify_subset_logic(const CouplingOutcome& outcome) {
    if (!outcome.reached_t_check) return true;  // indeterminate replicate
    if (!(outcome.g1 && outcome.g2)) return true;
    return outcome.n_lm_check == 0 && outcome.n_bad_check == 0 && outcome.success;
}

}

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "unitlint/constraints.hpp"

namespace unitlint {

struct Diagnostic {
    std::string file;
    int line = 0;
    int col = 0;
    std::string severity = "error";
    std::string code;  // UTE001 dimension | UTE002 frame | UTE003 arg/ret
    std::string message;
    std::string left_type;
    std::string right_type;
    std::vector<std::string> chain;
};

struct SolveOptions {
    bool dedup = true;
};

struct SolveResult {
    bool sat = true;
    std::vector<Diagnostic> diagnostics;
    std::map<std::string, UnitType> model;  // fully-resolved named atoms
};

namespace detail {

class Solver {
public:
    Solver(const ConstraintSet& cs, const SolveOptions& opts) : cs_(cs), opts_(opts) {}

    SolveResult run() {
        realize_all();
        propagate();
        return report();
    }

private:
    struct DimVal {
        bool known = false;
        Rational scalar;
        ExpVec exps{};
        std::vector<int> trail;
    };
    struct FrameVal {
        bool known = false;
        FrameSpec frame;
        std::vector<int> trail;
    };
    struct Pending {
        int result;
        Rational known_scalar;
        ExpVec known_exps{};
        FrameSpec known_frame;  // meet of Known children frames
        std::vector<std::pair<int, int>> factors;  // (atom, exponent sign)
        int cid;
    };
    struct Realized {
        int lhs, rhs;
    };
    struct Conflict {
        int cid;
        bool dimensional;
        std::string left, right;
        std::vector<int> left_trail, right_trail;
        int left_atom, right_atom;
    };

    const ConstraintSet& cs_;
    const SolveOptions& opts_;
    std::map<std::string, int> atom_ids_;
    std::vector<std::string> display_;
    std::vector<bool> argret_;
    std::vector<int> parent_dim_, parent_frame_;
    std::vector<DimVal> dim_;
    std::vector<FrameVal> frame_;
    std::vector<Pending> pendings_;
    std::vector<Realized> realized_;
    std::vector<Conflict> conflicts_;
    std::set<int> conflicted_;  // constraint ids already recorded
    int anon_ = 0;
    bool changed_ = false;

    int find(std::vector<int>& p, int x) {
        while (p[x] != x) {
            p[x] = p[p[x]];
            x = p[x];
        }
        return x;
    }

    int new_atom(const std::string& key, const std::string& display, bool argret) {
        auto it = atom_ids_.find(key);
        if (it != atom_ids_.end()) return it->second;
        int id = static_cast<int>(display_.size());
        atom_ids_.emplace(key, id);
        display_.push_back(display);
        argret_.push_back(argret);
        parent_dim_.push_back(id);
        parent_frame_.push_back(id);
        dim_.emplace_back();
        frame_.emplace_back();
        return id;
    }

    int atom_of(const Term& t, int cid) {
        switch (t.kind) {
            case Term::Kind::Known: {
                int id = new_atom("known:" + std::to_string(anon_++), term_to_string(t), false);
                dim_[id].known = true;
                dim_[id].scalar = t.known.scalar_log10;
                dim_[id].exps = t.known.exponents;
                dim_[id].trail = {cid};
                frame_[id].known = true;
                frame_[id].frame = t.known.frame;
                frame_[id].trail = {cid};
                return id;
            }
            case Term::Kind::Var:
                return new_atom("var:" + t.scope + "#" + t.name, term_to_string(t), false);
            case Term::Kind::ArgType:
                return new_atom("arg:" + t.name + "#" + std::to_string(t.index),
                                term_to_string(t), true);
            case Term::Kind::ArgField:
                return new_atom(
                    "argf:" + t.name + "#" + std::to_string(t.index) + "." + t.field,
                    term_to_string(t), false);
            case Term::Kind::Ret:
                return new_atom("ret:" + t.name, term_to_string(t), true);
            case Term::Kind::Fresh:
                return new_atom("fresh:" + std::to_string(t.index), term_to_string(t), false);
            case Term::Kind::Product:
            case Term::Kind::Quotient: {
                Pending p;
                p.result =
                    new_atom("prod:" + std::to_string(anon_++), term_to_string(t), false);
                p.known_scalar = rat(0);
                p.cid = cid;
                flatten(t, 1, p, cid);
                pendings_.push_back(std::move(p));
                return pendings_.back().result;
            }
        }
        return 0;
    }

    void flatten(const Term& t, int sign, Pending& p, int cid) {
        if (t.kind == Term::Kind::Product || t.kind == Term::Kind::Quotient) {
            flatten(*t.lhs, sign, p, cid);
            flatten(*t.rhs, t.kind == Term::Kind::Product ? sign : -sign, p, cid);
            return;
        }
        if (t.kind == Term::Kind::Known) {
            p.known_scalar += sign * t.known.scalar_log10;
            for (int i = 0; i < kNumBases; ++i) p.known_exps[i] += sign * t.known.exponents[i];
            auto met = frame_meet(p.known_frame, t.known.frame);
            if (met.ok()) p.known_frame = met.value();
            return;
        }
        p.factors.emplace_back(atom_of(t, cid), sign);
    }

    void realize_all() {
        for (std::size_t i = 0; i < cs_.items.size(); ++i) {
            int cid = static_cast<int>(i);
            realized_.push_back({atom_of(*cs_.items[i].lhs, cid), atom_of(*cs_.items[i].rhs, cid)});
        }
    }

    std::string dim_string(const DimVal& d) {
        if (!d.known) return "unconstrained";
        UnitType u;
        u.scalar_log10 = d.scalar;
        u.exponents = d.exps;
        return format_unit(u);
    }

    void record_conflict(int cid, bool dimensional, int la, int ra, const std::string& l,
                         const std::string& r, std::vector<int> lt, std::vector<int> rt) {
        if (!conflicted_.insert(cid).second) return;
        conflicts_.push_back({cid, dimensional, l, r, std::move(lt), std::move(rt), la, ra});
    }

    void union_dim(int a, int b, int cid) {
        int ra = find(parent_dim_, a), rb = find(parent_dim_, b);
        if (ra == rb) return;
        DimVal& da = dim_[ra];
        DimVal& db = dim_[rb];
        if (da.known && db.known && (da.scalar != db.scalar || da.exps != db.exps)) {
            record_conflict(cid, true, a, b, dim_string(da), dim_string(db), da.trail, db.trail);
            return;  // keep the classes apart so both sides stay reportable
        }
        DimVal merged = da.known ? da : db;
        merged.trail = da.trail;
        merged.trail.insert(merged.trail.end(), db.trail.begin(), db.trail.end());
        merged.trail.push_back(cid);
        bool keep_argret = false;  // argret flags live on the atom, checked via scan
        (void)keep_argret;
        parent_dim_[rb] = ra;
        dim_[ra] = std::move(merged);
        changed_ = true;
    }

    void union_frame(int a, int b, int cid) {
        int ra = find(parent_frame_, a), rb = find(parent_frame_, b);
        if (ra == rb) return;
        FrameVal& fa = frame_[ra];
        FrameVal& fb = frame_[rb];
        FrameVal merged;
        if (fa.known && fb.known) {
            auto met = frame_meet(fa.frame, fb.frame);
            if (!met.ok()) {
                record_conflict(cid, false, a, b, fa.frame.to_string(), fb.frame.to_string(),
                                fa.trail, fb.trail);
                return;
            }
            merged.known = true;
            merged.frame = met.value();
        } else if (fa.known || fb.known) {
            merged.known = true;
            merged.frame = fa.known ? fa.frame : fb.frame;
        }
        merged.trail = fa.trail;
        merged.trail.insert(merged.trail.end(), fb.trail.begin(), fb.trail.end());
        merged.trail.push_back(cid);
        parent_frame_[rb] = ra;
        frame_[ra] = std::move(merged);
        changed_ = true;
    }

    void bind_frame(int atom, const FrameSpec& f, std::vector<int> trail, int cid) {
        int r = find(parent_frame_, atom);
        if (frame_[r].known) return;
        frame_[r].known = true;
        frame_[r].frame = f;
        frame_[r].trail = std::move(trail);
        frame_[r].trail.push_back(cid);
        changed_ = true;
    }

    void bind_dim(int atom, const Rational& scalar, const ExpVec& exps, int cid) {
        int r = find(parent_dim_, atom);
        DimVal& d = dim_[r];
        if (d.known) {
            if (d.scalar != scalar || d.exps != exps) {
                DimVal computed;
                computed.known = true;
                computed.scalar = scalar;
                computed.exps = exps;
                record_conflict(cid, true, atom, atom, dim_string(d), dim_string(computed),
                                d.trail, {cid});
            }
            return;
        }
        d.known = true;
        d.scalar = scalar;
        d.exps = exps;
        d.trail.push_back(cid);
        changed_ = true;
    }

    void resolve_products(bool final_frames) {
        for (const auto& p : pendings_) {
            int unknown_count = 0;
            const std::pair<int, int>* unknown = nullptr;
            Rational scalar = p.known_scalar;
            ExpVec exps = p.known_exps;
            for (const auto& f : p.factors) {
                const DimVal& d = dim_[find(parent_dim_, f.first)];
                if (!d.known) {
                    ++unknown_count;
                    unknown = &f;
                    continue;
                }
                scalar += f.second * d.scalar;
                for (int i = 0; i < kNumBases; ++i) exps[i] += f.second * d.exps[i];
            }
            const DimVal& res = dim_[find(parent_dim_, p.result)];
            if (unknown_count == 0) {
                bind_dim(p.result, scalar, exps, p.cid);
            } else if (unknown_count == 1 && res.known) {
                // result = scalar + sign*unknown  =>  unknown = (result - scalar)/sign
                Rational us = (res.scalar - scalar) * unknown->second;
                ExpVec ue{};
                for (int i = 0; i < kNumBases; ++i)
                    ue[i] = (res.exps[i] - exps[i]) * unknown->second;
                bind_dim(unknown->first, us, ue, p.cid);
            }
            // Frame: meet of the children. Wait for every factor's frame
            // unless this is the final pass, where unknowns count as Any.
            FrameSpec f = p.known_frame;
            bool ok = true;
            for (const auto& fac : p.factors) {
                const FrameVal& fv = frame_[find(parent_frame_, fac.first)];
                if (!fv.known) {
                    if (!final_frames) ok = false;
                    continue;
                }
                if (!ok) break;
                auto met = frame_meet(f, fv.frame);
                if (!met.ok()) {
                    // Disjoint factor frames: the product itself is ill-typed.
                    record_conflict(p.cid, false, p.result, fac.first, f.to_string(),
                                    fv.frame.to_string(), {}, {});
                    ok = false;
                    break;
                }
                f = met.value();
            }
            if (ok) bind_frame(p.result, f, {}, p.cid);
        }
    }

    void propagate() {
        bool again = true;
        while (again) {
            fixpoint(false);
            changed_ = false;
            resolve_products(true);
            again = changed_;
            if (again) fixpoint(false);
        }
    }

    void fixpoint(bool final_frames) {
        do {
            changed_ = false;
            for (std::size_t i = 0; i < cs_.items.size(); ++i) {
                const Constraint& c = cs_.items[i];
                int cid = static_cast<int>(i);
                const Realized& r = realized_[i];
                union_dim(r.lhs, r.rhs, cid);
                if (c.kind == Constraint::Kind::Equal) {
                    union_frame(r.lhs, r.rhs, cid);
                } else {
                    // Gradual frame flow: an unbound slot adopts the value's
                    // frame. Never copy the supertype's frame onto the value —
                    // the value's real frame may still be on its way via an
                    // Equal, and pre-binding would mask the conflict.
                    const FrameVal& fl = frame_[find(parent_frame_, r.lhs)];
                    const FrameVal& fr = frame_[find(parent_frame_, r.rhs)];
                    if (fl.known && !fr.known) bind_frame(r.rhs, fl.frame, fl.trail, cid);
                    else if (c.kind == Constraint::Kind::SameDim && fr.known && !fl.known)
                        bind_frame(r.lhs, fr.frame, fr.trail, cid);
                }
            }
            resolve_products(final_frames);
        } while (changed_);
    }

    bool class_has_argret(int atom) {
        int root = find(parent_dim_, atom);
        for (std::size_t i = 0; i < argret_.size(); ++i)
            if (argret_[i] && find(parent_dim_, static_cast<int>(i)) == root) return true;
        return false;
    }

    std::string resolved_string(int atom) {
        const DimVal& d = dim_[find(parent_dim_, atom)];
        const FrameVal& f = frame_[find(parent_frame_, atom)];
        std::string unit = dim_string(d);
        std::string fr = f.known ? f.frame.to_string() : "Any";
        return "(" + unit + ", " + fr + ")";
    }

    std::vector<std::string> build_chain(int cid, int la, int ra, const std::vector<int>& lt,
                                         const std::vector<int>& rt) {
        std::vector<std::string> chain;
        auto side = [&](const char* tag, int atom, const std::vector<int>& trail) {
            chain.push_back(std::string(tag) + ": " + display_[atom] + " = " +
                            resolved_string(atom));
            std::set<int> seen;
            for (int t : trail) {
                if (t < 0 || t >= static_cast<int>(cs_.items.size())) continue;
                if (!seen.insert(t).second) continue;
                const Constraint& c = cs_.items[t];
                std::string at = c.pos.file.empty()
                                     ? "seed"
                                     : c.pos.file + ":" + std::to_string(c.pos.line);
                chain.push_back("  via " + c.reason + " [" + term_to_string(*c.lhs) + " ~ " +
                                term_to_string(*c.rhs) + "] at " + at);
            }
        };
        const Constraint& c = cs_.items[cid];
        chain.push_back("violated: " + c.reason + " at " + c.pos.file + ":" +
                        std::to_string(c.pos.line));
        side("left", la, lt);
        side("right", ra, rt);
        return chain;
    }

    Diagnostic make_diag(int cid, bool dimensional, int la, int ra, const std::string& l,
                         const std::string& r, const std::vector<int>& lt,
                         const std::vector<int>& rt) {
        const Constraint& c = cs_.items[cid];
        Diagnostic d;
        d.file = c.pos.file;
        d.line = c.pos.line;
        d.col = c.pos.col;
        d.left_type = l;
        d.right_type = r;
        if (dimensional) {
            d.code = "UTE001";
            d.message = "unit mismatch in " + c.reason + ": " + l + " vs " + r;
        } else if (class_has_argret(la) || class_has_argret(ra)) {
            d.code = "UTE003";
            d.message = "argument/return type inconsistency in " + c.reason + ": frame " + l +
                        " vs " + r;
        } else {
            d.code = "UTE002";
            d.message = "frame mismatch in " + c.reason + ": " + l + " vs " + r;
        }
        d.chain = build_chain(cid, la, ra, lt, rt);
        return d;
    }

    SolveResult report() {
        std::vector<std::pair<int, Diagnostic>> diags;
        for (const auto& cf : conflicts_)
            diags.emplace_back(cf.cid, make_diag(cf.cid, cf.dimensional, cf.left_atom,
                                                 cf.right_atom, cf.left, cf.right, cf.left_trail,
                                                 cf.right_trail));
        // Validate frame relations that unification alone does not enforce.
        for (std::size_t i = 0; i < cs_.items.size(); ++i) {
            const Constraint& c = cs_.items[i];
            int cid = static_cast<int>(i);
            if (c.kind == Constraint::Kind::Equal || conflicted_.count(cid)) continue;
            const Realized& r = realized_[i];
            const FrameVal& fl = frame_[find(parent_frame_, r.lhs)];
            const FrameVal& fr = frame_[find(parent_frame_, r.rhs)];
            if (!fl.known || !fr.known) continue;
            bool ok = c.kind == Constraint::Kind::Subtype
                          ? frame_below(fl.frame, fr.frame)
                          : frame_below(fl.frame, fr.frame) || frame_below(fr.frame, fl.frame);
            if (!ok) {
                const FrameVal flc = fl, frc = fr;
                diags.emplace_back(cid,
                                   make_diag(cid, false, r.lhs, r.rhs, flc.frame.to_string(),
                                             frc.frame.to_string(), flc.trail, frc.trail));
                conflicted_.insert(cid);
            }
        }
        std::stable_sort(diags.begin(), diags.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });

        SolveResult out;
        std::set<std::string> seen;
        for (auto& [cid, d] : diags) {
            if (opts_.dedup) {
                std::string key = d.file + ":" + std::to_string(d.line) + ":" + d.code + ":" +
                                  d.left_type + ":" + d.right_type;
                if (!seen.insert(key).second) continue;
            }
            out.diagnostics.push_back(std::move(d));
        }
        out.sat = out.diagnostics.empty();
        for (const auto& [key, id] : atom_ids_) {
            if (key.rfind("known:", 0) == 0 || key.rfind("fresh:", 0) == 0 ||
                key.rfind("prod:", 0) == 0)
                continue;
            const DimVal& d = dim_[find(parent_dim_, id)];
            if (!d.known) continue;
            UnitType u;
            u.scalar_log10 = d.scalar;
            u.exponents = d.exps;
            const FrameVal& f = frame_[find(parent_frame_, id)];
            if (f.known) u.frame = f.frame;
            out.model.emplace(display_[id], u);
        }
        return out;
    }
};

}  // namespace detail

inline SolveResult solve(const ConstraintSet& cs, const SolveOptions& opts = {}) {
    detail::Solver s(cs, opts);
    return s.run();
}

/// One-hop-per-line rendering of a diagnostic's constraint chain.
inline std::string explain(const Diagnostic& d) {
    std::string out = d.file + ":" + std::to_string(d.line) + ": " + d.code + " " + d.message;
    for (const auto& hop : d.chain) out += "\n  " + hop;
    out += "\n";
    return out;
}

inline std::string dump_constraints(const ConstraintSet& cs) {
    std::string out;
    for (const auto& c : cs.items) out += constraint_to_sexpr(c) + "\n";
    return out;
}

/// Post-hoc check that a Sat model satisfies every constraint whose terms it
/// fully resolves; used by tests as a soundness oracle.
inline bool validate_model(const ConstraintSet& cs, const SolveResult& result) {
    if (!result.sat) return false;
    std::function<std::optional<UnitType>(const Term&)> eval =
        [&](const Term& t) -> std::optional<UnitType> {
        switch (t.kind) {
            case Term::Kind::Known: return t.known;
            case Term::Kind::Product:
            case Term::Kind::Quotient: {
                auto l = eval(*t.lhs);
                auto r = eval(*t.rhs);
                if (!l || !r) return std::nullopt;
                auto res = t.kind == Term::Kind::Product ? mul(*l, *r) : div(*l, *r);
                if (!res.ok()) return std::nullopt;
                return res.value();
            }
            default: {
                auto it = result.model.find(term_to_string(t));
                if (it == result.model.end()) return std::nullopt;
                return it->second;
            }
        }
    };
    for (const auto& c : cs.items) {
        auto l = eval(*c.lhs);
        auto r = eval(*c.rhs);
        if (!l || !r) continue;
        switch (c.kind) {
            case Constraint::Kind::Equal:
                if (!l->same_dimension(*r)) return false;
                if (!frame_meet(l->frame, r->frame).ok()) return false;
                break;
            case Constraint::Kind::Subtype:
                if (!l->same_dimension(*r) || !frame_below(l->frame, r->frame)) return false;
                break;
            case Constraint::Kind::SameDim:
                if (!l->same_dimension(*r)) return false;
                if (!frame_below(l->frame, r->frame) && !frame_below(r->frame, l->frame))
                    return false;
                break;
        }
    }
    return true;
}

}  // namespace unitlint

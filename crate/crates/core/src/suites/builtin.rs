use std::f64::consts::TAU;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use super::{Check, Suite, SuiteContext, SuiteReport};
use crate::cover::{
    admissible_eigenvalues, boundary_value, build_cover, cover_size, cylinders_at, deck_generators, diagram_check,
    poisson_transform, reduced_words, restriction, verify_cocycle_identities, verify_intertwining,
    verify_tree_equalizer, BoundaryMeasure, DeckWord, MAX_COVER_VERTICES,
};
use crate::error::Result;
use crate::graph::{enumerate_codes, Graph, MAX_CODES_PER_LEVEL};
use crate::linalg::{c, eigenspace, intersection_dim, max_abs, null_space, rank, C64, ONE};
use crate::measures::{
    canonical_transpose, degeneracy_test, dual_transfer_apply, extension_bound, measure_from_edge_function,
    synthetic_degeneracy_trial, transfer_duality_residual, MeasureTable,
};
use crate::operators::{
    edge_form, local_tweak, neighbor_avg, neighbor_sum, rescale, turn_sum, verify_operator_identity,
};
use crate::path_space::{
    loc_const_spectrum_check, transfer_down, verify_contraction_bounds, DependsFunction, ThetaMetric,
};
use crate::ser::fmt_c64;
use crate::spectral::{correspondence, correspondence_report, regularity_report, spectrum, SpectrumReport};

const IDENTITY_TOL: f64 = 1e-10;
const DUAL_TOL: f64 = 1e-10;
const ROUND_TRIP_TOL: f64 = 1e-12;
const VARIANCE_TOL: f64 = 1e-10;

fn s_spectrum(ctx: &SuiteContext<'_>) -> Result<SpectrumReport> {
    spectrum(&turn_sum(ctx.graph)?.matrix, &ctx.config.spectrum)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

/// Largest level `<= want` whose code count stays within the enumeration limit.
fn feasible_depth(g: &Graph, want: usize) -> usize {
    (1..=want).rev().find(|&d| g.count_codes(d) <= MAX_CODES_PER_LEVEL as u128).unwrap_or(1)
}

pub struct IdentitySuite;

impl Suite for IdentitySuite {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn description(&self) -> &'static str {
        "operator identity (S - z) G_z = ι (Σ - ρ_z) and structural facts about S"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let mut rng = ctx.rng("identity");
        let mut zs = ctx.config.z_values.clone();
        for _ in 0..ctx.config.random_z {
            let r: f64 = rng.random_range(0.2..3.0);
            let t: f64 = rng.random_range(0.0..TAU);
            zs.push(C64::from_polar(r, t));
        }
        let reports = zs.iter().map(|&z| verify_operator_identity(g, z)).collect::<Result<Vec<_>>>()?;

        let s = turn_sum(g)?.matrix;
        let b = edge_form(g)?;
        let self_adj = max_abs((s.t().dot(&b) - b.dot(&s)).iter());
        let one = ndarray::Array1::from_elem(g.num_vertices(), ONE);
        let avg = max_abs((neighbor_avg(g)?.matrix.dot(&one) - &one).iter());

        let mut eq_ok = true;
        let sigma = neighbor_sum(g)?.matrix;
        let delta = neighbor_avg(g)?.matrix;
        for z in admissible_eigenvalues(g, &ctx.config.spectrum)? {
            let a = null_space(&(&sigma - &rescale(g, z)?.matrix), ctx.config.spectrum.rank_tol)?;
            let d = null_space(&(&delta - &local_tweak(g, z)?.matrix), ctx.config.spectrum.rank_tol)?;
            eq_ok &= a.ncols() == d.ncols() && intersection_dim(&a, &d, 1e-8)? == a.ncols();
        }

        let checks = vec![
            Check::at_most("operator_identity", max_of(reports.iter().map(|r| r.residual)), IDENTITY_TOL),
            Check::at_most("in_sum_identity", max_of(reports.iter().map(|r| r.in_sum_residual)), IDENTITY_TOL),
            Check::holds("turn_sum_injective", rank(&s, 1e-10)? == g.num_edges()),
            Check::exact("edge_form_self_adjoint", self_adj),
            Check::at_most("neighbor_avg_fixes_constants", avg, 1e-14),
            Check::holds("equalizer_rescaling", eq_ok),
        ];
        let near = reports.iter().filter(|r| r.near_unit).count();
        let summary = vec![format!(
            "{} parameters, max identity residual {:.3e}, {} near ±1",
            reports.len(),
            checks[0].value,
            near
        )];
        Ok(SuiteReport::new(self.name(), ctx.graph_name, checks, summary, json!({ "parameters": reports })))
    }
}

pub struct SpectrumSuite;

#[derive(Serialize)]
struct EigenLine {
    #[serde(serialize_with = "crate::ser::complex")]
    z: C64,
    modulus: f64,
    algebraic: usize,
    geometric: usize,
    max_jordan_block: usize,
    /// `|z| > θ R`.
    outside_essential_radius: bool,
}

impl Suite for SpectrumSuite {
    fn name(&self) -> &'static str {
        "spectrum"
    }

    fn description(&self) -> &'static str {
        "spectrum of the turn sum, spectral radius, pile heights and Gelfand limit"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let opts = &ctx.config.spectrum;
        let spec = s_spectrum(ctx)?;
        let s = turn_sum(g)?.matrix;
        let spec_t = spectrum(&s.t().to_owned(), opts)?;
        let transpose_ok = spec.clusters.len() == spec_t.clusters.len()
            && spec.clusters.iter().zip(&spec_t.clusters).all(|(a, b)| {
                (a.value - b.value).norm() <= opts.cluster_tol && a.algebraic == b.algebraic
            });
        let reg = regularity_report(g, ctx.config.gelfand_n, ctx.config.submult_max)?;
        let r = spec.spectral_radius;
        let theta = ctx.config.theta;
        let lines: Vec<EigenLine> = spec
            .expanded()
            .into_iter()
            .map(|cl| EigenLine {
                z: cl.value,
                modulus: cl.value.norm(),
                algebraic: cl.algebraic,
                geometric: cl.geometric,
                max_jordan_block: cl.max_jordan_block,
                outside_essential_radius: cl.value.norm() > theta * r,
            })
            .collect();
        let jordan: Vec<String> =
            spec.clusters.iter().filter(|c| c.max_jordan_block > 1).map(|c| fmt_c64(c.value)).collect();
        let nonzero: usize = spec.nonzero().map(|c| c.algebraic).sum();

        let checks = vec![
            Check::holds("transpose_spectrum", transpose_ok),
            Check::holds("nonzero_spectrum_is_full", nonzero == g.num_edges()),
            Check::holds("radius_is_qmax_iff_regular", reg.radius_is_q_max == reg.regular),
            Check::holds("submultiplicativity", reg.submultiplicativity_violations.is_empty()),
            Check::holds("pile_roots_bound_radius", reg.roots_bound_radius),
            Check::holds("running_min_gap_nonincreasing", reg.running_min_gaps.windows(2).all(|w| w[1] <= w[0])),
        ];
        let mut summary = vec![format!(
            "R = {:.12}, q_max = {}, {}; {} eigenvalues, {} with |z| > θR = {:.4}",
            r,
            reg.q_max,
            if reg.regular { "regular" } else { "not regular" },
            lines.len(),
            lines.iter().filter(|l| l.outside_essential_radius).count(),
            theta * r
        )];
        for l in &lines {
            summary.push(format!(
                "  {:>28}  |z| = {:.6}  alg {} geo {}{}",
                fmt_c64(l.z),
                l.modulus,
                l.algebraic,
                l.geometric,
                if l.outside_essential_radius { "  *" } else { "" }
            ));
        }
        if jordan.is_empty() {
            summary.push("no Jordan blocks".into());
        }
        let details = json!({
            "spectrum": spec,
            "eigenvalues": lines,
            "regularity": reg,
            "jordan_blocks_at": jordan,
        });
        Ok(SuiteReport::new(self.name(), ctx.graph_name, checks, summary, details))
    }
}

pub struct CorrespondSuite;

impl Suite for CorrespondSuite {
    fn name(&self) -> &'static str {
        "correspond"
    }

    fn description(&self) -> &'static str {
        "twisted gradient between vertex equalizers and edge eigenvectors"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let opts = &ctx.config.spectrum;
        let tol = ctx.config.tol;
        let spec = s_spectrum(ctx)?;
        let mut rows = correspondence_report(g, opts, tol)?;
        for &z in &ctx.config.z_values {
            rows.push(correspondence(g, z, opts, tol)?);
        }
        let adm: Vec<_> = rows.iter().filter(|r| r.admissible).collect();
        let checks = vec![
            Check::holds("dimensions_match", adm.iter().all(|r| r.dim_vertex == r.dim_edge)),
            Check::holds("gradient_injective", adm.iter().all(|r| r.gradient_rank == r.dim_vertex)),
            Check::at_most("gradient_bijectivity", max_of(adm.iter().map(|r| r.gradient_bijectivity_residual)), tol),
            Check::at_most("inverse_composition", max_of(adm.iter().map(|r| r.inverse_composition_residual)), tol),
        ];
        let mut summary = Vec::new();
        for cl in spec.expanded() {
            let row = rows.iter().find(|r| r.z == cl.value).expect("one row per cluster");
            summary.push(if row.admissible {
                format!(
                    "  {:>28}  dim Eq = {}  dim null = {}  {}",
                    fmt_c64(row.z),
                    row.dim_vertex,
                    row.dim_edge,
                    if row.matched { "matched" } else { "MISMATCH" }
                )
            } else {
                format!("  {:>28}  excluded", fmt_c64(row.z))
            });
        }
        Ok(SuiteReport::new(self.name(), ctx.graph_name, checks, summary, json!({ "rows": rows })))
    }
}

pub struct LocConstSuite;

impl Suite for LocConstSuite {
    fn name(&self) -> &'static str {
        "locconst"
    }

    fn description(&self) -> &'static str {
        "transfer operator on locally constant functions against the turn sum"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let mut checks = Vec::new();
        let mut levels = Vec::new();
        let mut summary = Vec::new();
        for n in 2..=ctx.config.depth {
            if feasible_depth(g, n) < n {
                summary.push(format!("n = {n}: skipped, |W_n| exceeds {MAX_CODES_PER_LEVEL}"));
                continue;
            }
            let lvl = loc_const_spectrum_check(g, n, &ctx.config.spectrum, ctx.config.tol, VARIANCE_TOL)?;
            checks.push(Check::at_most(format!("n{n}_nonzero_spectrum"), lvl.eigenvalue_deviation, ctx.config.tol));
            checks.push(Check::holds(format!("n{n}_multiplicities"), lvl.multiplicities_match));
            checks.push(Check::at_most(format!("n{n}_district_variance"), lvl.district_variance, VARIANCE_TOL));
            checks.push(Check::exact(format!("n{n}_commutation"), lvl.commutation_residual));
            summary.push(format!(
                "n = {n}: dim {}, eigenvalue deviation {:.3e}, district variance {:.3e}",
                lvl.dimension, lvl.eigenvalue_deviation, lvl.district_variance
            ));
            levels.push(lvl);
        }
        Ok(SuiteReport::new(self.name(), ctx.graph_name, checks, summary, json!({ "levels": levels })))
    }
}

pub struct BoundsSuite;

impl Suite for BoundsSuite {
    fn name(&self) -> &'static str {
        "bounds"
    }

    fn description(&self) -> &'static str {
        "contraction, iteration, projection and extension estimates on random functions"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let n = feasible_depth(g, ctx.config.depth).max(2);
        let tree = enumerate_codes(g, n)?;
        let mut thetas = ctx.config.bounds_thetas.clone();
        thetas.push(ctx.config.theta);
        thetas.sort_by(f64::total_cmp);
        thetas.dedup();
        let zs = admissible_eigenvalues(g, &ctx.config.spectrum)?;
        let s = turn_sum(g)?.matrix;

        let mut rng = ctx.rng("bounds");
        let mut checks = Vec::new();
        let mut summary = Vec::new();
        let mut reports = Vec::new();
        let mut ext = Vec::new();
        for &theta in &thetas {
            let metric = ThetaMetric::new(theta)?;
            let r = verify_contraction_bounds(g, &tree, n, metric, ctx.config.bounds_trials, &mut rng)?;
            let tag = format!("theta{theta}");
            for (name, v) in [
                ("sup", r.sup_ratio),
                ("lipschitz", r.lipschitz_ratio),
                ("iterated", r.iterated_ratio),
                ("projection", r.projection_ratio),
                ("projection_level0", r.projection_ratio_level0),
                ("approximation", r.approximation_ratio),
            ] {
                checks.push(Check::at_most(format!("{tag}_{name}_ratio"), v, 1.0 + 1e-12));
            }
            checks.push(Check::exact(format!("{tag}_seminorm_order"), r.seminorm_order_violations as f64));

            let mut worst = 0.0f64;
            let mut count = 0;
            for &z in zs.iter().filter(|z| z.norm() > theta * g.q_max() as f64) {
                let h = eigenspace(&s, z, ctx.config.spectrum.rank_tol)?;
                for col in h.columns() {
                    let mu = measure_from_edge_function(g, &tree, &col.to_vec(), z, n, 1e-8)?;
                    for _ in 0..5 {
                        let phi = DependsFunction::random(&tree, n, &mut rng);
                        let e = extension_bound(g, &tree, &phi, &mu, z, metric)?;
                        worst = worst.max(if e.deviation == 0.0 { 0.0 } else { e.deviation / e.bound });
                        count += 1;
                    }
                }
            }
            checks.push(Check::at_most(format!("{tag}_extension_ratio"), worst, 1.0 + 1e-12));
            summary.push(format!(
                "θ = {theta}: {} functions at depth {n}, worst ratios sup {:.3} lip {:.3} iter {:.3} proj {:.3} approx {:.3}; extension {:.3} over {count}",
                r.trials, r.sup_ratio, r.lipschitz_ratio, r.iterated_ratio, r.projection_ratio, r.approximation_ratio, worst
            ));
            ext.push(json!({ "theta": theta, "pairs": count, "worst_ratio": worst }));
            reports.push(r);
        }
        Ok(SuiteReport::new(self.name(), ctx.graph_name, checks, summary, json!({ "bounds": reports, "extension": ext })))
    }
}

pub struct DualSuite;

#[derive(Serialize)]
struct DualRow {
    #[serde(serialize_with = "crate::ser::complex")]
    z: C64,
    dimension: usize,
    measure_rank: usize,
    additivity: f64,
    eigen_residual: f64,
    round_trip: f64,
}

impl Suite for DualSuite {
    fn name(&self) -> &'static str {
        "dual"
    }

    fn description(&self) -> &'static str {
        "eigen-measures of the dual transfer operator and the pairing"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let d = feasible_depth(g, ctx.config.measure_depth).max(2);
        let tree = enumerate_codes(g, d)?;
        let s = turn_sum(g)?.matrix;
        let spec = s_spectrum(ctx)?;

        let mut rows = Vec::new();
        for cl in spec.nonzero() {
            let z = cl.value;
            let h = eigenspace(&s, z, ctx.config.spectrum.rank_tol)?;
            let mut row = DualRow { z, dimension: h.ncols(), measure_rank: 0, additivity: 0.0, eigen_residual: 0.0, round_trip: 0.0 };
            let mut level1 = crate::linalg::CMat::zeros((g.num_edges(), h.ncols()));
            for (j, col) in h.columns().into_iter().enumerate() {
                let f = col.to_vec();
                let mu = measure_from_edge_function(g, &tree, &f, z, d, 1e-8)?;
                row.additivity = row.additivity.max(mu.additivity_residual(&tree));
                row.eigen_residual = row.eigen_residual.max(dual_transfer_apply(g, &tree, &mu).max_abs_diff(&mu.scale(z)));
                let back = canonical_transpose(g, &mu);
                let again = measure_from_edge_function(g, &tree, &back, z, d, 1e-8)?;
                let rt = max_of(back.iter().zip(&f).map(|(a, b)| (a - b).norm())).max(again.max_abs_diff(&mu));
                row.round_trip = row.round_trip.max(rt);
                for (e, v) in mu.level(1).iter().enumerate() {
                    level1[[e, j]] = *v;
                }
            }
            row.measure_rank = if h.ncols() == 0 { 0 } else { rank(&level1, 1e-10)? };
            rows.push(row);
        }

        let mut rng = ctx.rng("dual");
        let mut duality = 0.0f64;
        for _ in 0..ctx.config.duality_pairs {
            let mu = MeasureTable::random_additive(&tree, d, &mut rng);
            let phi = DependsFunction::random(&tree, d - 1, &mut rng);
            duality = duality.max(transfer_duality_residual(g, &tree, &phi, &mu)?);
        }

        let mut indicator = 0.0f64;
        for k in 1..d {
            let l = transfer_down(g, &tree, k)?.matrix;
            for (j, code) in tree.level(k + 1).iter().enumerate() {
                let tail = tree.index_of(&code[1..]).unwrap();
                for i in 0..tree.size(k) {
                    let want = if i == tail { 1.0 } else { 0.0 };
                    indicator = indicator.max((l[[i, j]] - want).norm());
                }
            }
        }

        let mu = MeasureTable::random_additive(&tree, d, &mut rng);
        let lmu = dual_transfer_apply(g, &tree, &mu);
        let injective = (1..d).all(|k| {
            tree.level(k).iter().enumerate().all(|(i, code)| {
                let mut ext = vec![g.turns_into(code[0])[0]];
                ext.extend_from_slice(code);
                lmu.value(&tree, &ext) == Some(mu.level(k)[i])
            })
        });

        let checks = vec![
            Check::at_most("additivity", max_of(rows.iter().map(|r| r.additivity)), DUAL_TOL),
            Check::at_most("dual_eigen_equation", max_of(rows.iter().map(|r| r.eigen_residual)), DUAL_TOL),
            Check::at_most("round_trip", max_of(rows.iter().map(|r| r.round_trip)), ROUND_TRIP_TOL),
            Check::holds("measure_dimension", rows.iter().all(|r| r.measure_rank == r.dimension)),
            Check::at_most("transfer_duality", duality, DUAL_TOL),
            Check::exact("indicator_transfer", indicator),
            Check::holds("dual_transfer_injective", injective),
            Check::at_most("random_dual_additivity", lmu.additivity_residual(&tree), DUAL_TOL),
        ];
        let mut summary = vec![format!(
            "depth {d}: {} eigenvalues, {} pairs, duality residual {:.3e}",
            rows.len(),
            ctx.config.duality_pairs,
            duality
        )];
        for r in &rows {
            summary.push(format!(
                "  {:>28}  eigen-measures {}  additivity {:.1e}  L'μ - zμ {:.1e}",
                fmt_c64(r.z),
                r.dimension,
                r.additivity,
                r.eigen_residual
            ));
        }
        let top = spec.nonzero().max_by(|a, b| a.value.norm().total_cmp(&b.value.norm())).map(|c| c.value);
        let sample = match top {
            Some(z) => {
                let h = eigenspace(&s, z, ctx.config.spectrum.rank_tol)?;
                let small = enumerate_codes(g, 2)?;
                let f = h.column(0).to_vec();
                Some(measure_from_edge_function(g, &small, &f, z, 2, 1e-8)?.to_json(&small))
            }
            None => None,
        };
        Ok(SuiteReport::new(
            self.name(),
            ctx.graph_name,
            checks,
            summary,
            json!({ "depth": d, "rows": rows, "duality_residual": duality, "sample_measure": sample }),
        ))
    }
}

pub struct DegeneracySuite;

impl Suite for DegeneracySuite {
    fn name(&self) -> &'static str {
        "degeneracy"
    }

    fn description(&self) -> &'static str {
        "degeneracy of the pairing on eigenspaces against Jordan structure"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let opts = &ctx.config.spectrum;
        let spec = s_spectrum(ctx)?;
        let rows = spec.nonzero().map(|cl| degeneracy_test(g, cl.value, opts)).collect::<Result<Vec<_>>>()?;
        let mut rng = ctx.rng("degeneracy");
        let mut matched = 0;
        let mut degenerate = 0;
        let mut adjoint = 0.0f64;
        for _ in 0..ctx.config.synthetic_trials {
            let t = synthetic_degeneracy_trial(&mut rng, opts)?;
            matched += t.all_match as usize;
            degenerate += t.planted_degenerate.iter().filter(|&&d| d).count();
            adjoint = adjoint.max(t.adjoint_residual);
        }
        let trials = ctx.config.synthetic_trials;
        let checks = vec![
            Check::holds("gram_matches_jordan", rows.iter().all(|r| r.consistent)),
            Check::exact("synthetic_mismatches", (trials - matched) as f64),
            Check::at_most("synthetic_adjoint", adjoint, 1e-10),
        ];
        let blocks: Vec<String> = rows.iter().filter(|r| r.max_jordan_block > 1).map(|r| fmt_c64(r.z)).collect();
        let mut summary = vec![
            format!(
                "{} eigenvalues, {} degenerate; Jordan blocks at: {}",
                rows.len(),
                rows.iter().filter(|r| r.gram_degenerate).count(),
                if blocks.is_empty() { "none".to_string() } else { blocks.join(", ") }
            ),
            format!("synthetic: {matched}/{trials} matched, {degenerate} planted degenerate eigenvalues"),
        ];
        for r in &rows {
            summary.push(format!(
                "  {:>28}  dim {}  Gram rank {}  {}",
                fmt_c64(r.z),
                r.eigenspace_dim,
                r.gram_rank,
                if r.gram_degenerate { "degenerate" } else { "non-degenerate" }
            ));
        }
        Ok(SuiteReport::new(
            self.name(),
            ctx.graph_name,
            checks,
            summary,
            json!({ "rows": rows, "synthetic": { "trials": trials, "matched": matched, "planted_degenerate": degenerate } }),
        ))
    }
}

pub struct CoverSuite;

impl Suite for CoverSuite {
    fn name(&self) -> &'static str {
        "cover"
    }

    fn description(&self) -> &'static str {
        "universal cover: deck group, horocycles, Poisson transform and the lift diagram"
    }

    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        let g = ctx.graph;
        let opts = &ctx.config.spectrum;
        let base = ctx.config.cover_base;
        let gens = deck_generators(g, base);
        let maxw = gens.iter().map(|x| x.path.len()).max().unwrap_or(0);
        let mut rng = ctx.rng("cover");
        let mut checks = Vec::new();
        let mut summary = Vec::new();

        // Horocycle and cocycle identities.
        let words = reduced_words(gens.len(), 2);
        let xs: Vec<Vec<usize>> = (0..=3).flat_map(|k| cylinders_at(g, base, k)).collect();
        let letters = reduced_words(gens.len(), 1);
        let mut pairs: Vec<(DeckWord, DeckWord)> =
            letters.iter().flat_map(|a| letters.iter().map(move |b| (a.clone(), b.clone()))).collect();
        let long = reduced_words(gens.len(), 3);
        for _ in 0..20 {
            let a = long[rng.random_range(0..long.len())].clone();
            let b = long[rng.random_range(0..long.len())].clone();
            pairs.push((a, b));
        }
        let coc = verify_cocycle_identities(g, base, &gens, &words, &xs, &pairs, 3);
        checks.push(Check::exact("horocycle_identity", coc.horocycle_violations as f64));
        checks.push(Check::exact("cocycle_identity", coc.cocycle_violations as f64));
        checks.push(Check::exact("brackets_determined", coc.undetermined as f64));
        summary.push(format!(
            "rank {}, {} words, {} pairs, {} cells; forward variant fails on {}/{} cells",
            gens.len(),
            coc.words,
            coc.pairs,
            coc.cells,
            coc.forward_variant_violations,
            coc.forward_variant_cells
        ));

        // Poisson transform and boundary values on random measures.
        let d = feasible_depth(g, ctx.config.measure_depth).max(2);
        let cover = build_cover(g, base, d)?;
        let mut zs = admissible_eigenvalues(g, opts)?;
        zs.extend(ctx.config.z_values.iter().copied().filter(|z| (z * z - 1.0).norm() > 1e-6));
        let mut eq = 0.0f64;
        let mut bv = 0.0f64;
        for &z in &zs {
            let nu = BoundaryMeasure::random_additive(&cover, &mut rng);
            let p = poisson_transform(&cover, &nu, z)?;
            eq = eq.max(verify_tree_equalizer(g, &cover, &p, z) / max_abs(p.iter()).max(1.0));
            let back = boundary_value(&cover, &p, z)?;
            bv = bv.max(max_of(back.values.iter().zip(&nu.values).map(|(a, b)| (a - b).norm())));
        }
        checks.push(Check::at_most("poisson_equalizer", eq, ctx.config.tol));
        checks.push(Check::at_most("boundary_round_trip", bv, ctx.config.tol));

        // Intertwining on a cover deep enough for single letters.
        let mut deep = (2 * maxw + 2).max(d);
        while deep > d && cover_size(g, base, deep) > (MAX_COVER_VERTICES / 10) as u128 {
            deep -= 1;
        }
        let big = build_cover(g, base, deep)?;
        let nu = BoundaryMeasure::random_additive(&big, &mut rng);
        let mut inter = 0.0f64;
        let mut inter_checked = 0;
        for &z in zs.iter().take(3).chain([c(0.7, 1.3)].iter()) {
            let r = verify_intertwining(g, &big, &gens, &letters, &nu, z, 1)?;
            inter = inter.max(r.max_residual);
            inter_checked += r.vertices_checked;
        }
        checks.push(Check::at_most("intertwining", inter, ctx.config.tol));
        checks.push(Check::holds("intertwining_exercised", inter_checked > 0));

        // The lift diagram for every admissible eigenvalue.
        let tree = enumerate_codes(g, d)?;
        let rows = zs
            .iter()
            .filter(|z| ctx.config.z_values.iter().all(|w| w != *z))
            .map(|&z| diagram_check(g, &cover, &tree, z, opts))
            .collect::<Result<Vec<_>>>()?;
        let tol = ctx.config.tol;
        checks.push(Check::at_most("diagram_commutes", max_of(rows.iter().map(|r| r.deviation)), tol));
        checks.push(Check::at_most("eigen_poisson_equalizer", max_of(rows.iter().map(|r| r.equalizer_residual)), tol));
        checks.push(Check::at_most("eigen_boundary_round_trip", max_of(rows.iter().map(|r| r.boundary_round_trip)), tol));
        checks.push(Check::at_most("gradient_normalization", max_of(rows.iter().map(|r| r.normalization_residual)), tol));
        checks.push(Check::at_most(
            "restriction_bijective",
            max_of(rows.iter().map(|r| r.reconstruction_error.max(r.reconstruction_spread))),
            tol,
        ));
        checks.push(Check::at_most("twisted_invariance", max_of(rows.iter().map(|r| r.twisted_invariance_residual)), tol));

        if g.is_regular() {
            let q = g.q_max() as f64;
            let mu = measure_from_edge_function(g, &tree, &vec![ONE; g.num_edges()], c(q, 0.0), d, 1e-10)?;
            let p = poisson_transform(&cover, &restriction(&cover, &tree, &mu)?, c(q, 0.0))?;
            let dev = max_of(p.iter().map(|v| (v - (q + 1.0)).norm()));
            checks.push(Check::at_most("perron_constant", dev, tol));
            summary.push(format!("Perron lift is the constant {} (deviation {dev:.3e})", q + 1.0));
        }
        summary.push(format!(
            "cover depth {d} ({} vertices), intertwining depth {deep}; diagram over {} eigenvalues, max deviation {:.3e}",
            cover.len(),
            rows.len(),
            max_of(rows.iter().map(|r| r.deviation))
        ));
        let small = build_cover(g, base, d.min(3))?;
        Ok(SuiteReport::new(
            self.name(),
            ctx.graph_name,
            checks,
            summary,
            json!({ "cocycle": coc, "diagram": rows, "cover": small.to_json(g) }),
        ))
    }
}

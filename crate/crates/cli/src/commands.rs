//! Subcommand drivers. Each writes its result files and returns a short
//! summary for stdout.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::{json, Value};
use tmqi::basis::{
    hermite_gaussian_basis, support_half_width, to_time_domain, FrequencyGrid, TemporalMode,
};
use tmqi::fusion::{
    apply_fusion, cluster_statistics, fusion_distribution, grow_linear_cluster_with, verify_cluster,
    MultiQubitState,
};
use tmqi::gates::{
    compile_gate, compile_qudit_unitary, evaluate, green_leakage, phase_distance, target_matrix, GateName,
};
use tmqi::linalg::{haar_unitary, random_density, random_state, serde_rows, unitarity_residual};
use tmqi::mub::mub_bases;
use tmqi::pdc::{
    jsa, phasematching, pump_envelope, schmidt_decompose, EngineeredSource, Orientation, PhasematchModel,
    PhasematchSpec,
};
use tmqi::qkd::{bb84_run, qber_theory, Eve};
use tmqi::qpg::qpg_operator;
use tmqi::rng::substream;
use tmqi::states::{DensityMatrix, DensityTensor};
use tmqi::tomography::{
    biphoton_cycle, reconstruct_biphoton, reconstruct_single, run_biphoton_plan, run_single_plan, standard_cycle,
};

use crate::config::*;
use crate::error::CliError;
use crate::output::{OutputSet, OUTPUT_SCHEMA};

type CmdResult = Result<Value, CliError>;

fn complex_vec(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

pub fn modes(cfg: &ModesConfig, out: &mut OutputSet) -> CmdResult {
    let count = cfg.mub_dim.unwrap_or(cfg.n_modes);
    if count == 0 {
        return Err(CliError::Config("modes: n_modes must be positive".into()));
    }
    let span = cfg.span.unwrap_or(2.5 * support_half_width(count - 1, cfg.width));
    let grid = FrequencyGrid::new(cfg.center, span, cfg.n_points)?;
    let basis = hermite_gaussian_basis(count, cfg.center, cfg.width, &grid)?;
    let mut modes: Vec<TemporalMode> = match cfg.mub_dim {
        Some(d) => mub_bases(d, d + 1)?.to_temporal_modes(&basis)?.into_iter().flatten().collect(),
        None => basis.modes().to_vec(),
    };
    if cfg.domain == ModeDomain::Time {
        modes = modes.iter().map(to_time_domain).collect::<tmqi::Result<_>>()?;
    }
    let mut csv = String::from("mode,label,x,re,im,abs,phase\n");
    let mut listed = Vec::with_capacity(modes.len());
    for (k, m) in modes.iter().enumerate() {
        let label = m.label().unwrap_or("").to_string();
        for (i, a) in m.amplitude().iter().enumerate() {
            let _ = writeln!(csv, "{k},{label},{:e},{:e},{:e},{:e},{:e}", m.grid().point(i), a.re, a.im, a.norm(), a.arg());
        }
        listed.push(json!({"label": label, "amplitude": m.amplitude()}));
    }
    let axis = modes.first().map(|m| *m.grid()).unwrap_or(grid);
    let body = json!({
        "schema": OUTPUT_SCHEMA,
        "domain": cfg.domain,
        "grid": axis,
        "modes": listed,
    });
    out.write_table("modes", &body, &csv)?;
    Ok(json!({"modes": modes.len(), "n_points": cfg.n_points}))
}

pub fn decompose(cfg: &DecomposeConfig, out: &mut OutputSet) -> CmdResult {
    let src = EngineeredSource::new(cfg.order, cfg.sigma, cfg.center, cfg.n_points);
    let grid = src.grid()?;
    let pm = match cfg.phasematch {
        PhasematchKind::Engineered => src.phasematch(),
        kind => PhasematchSpec {
            model: if kind == PhasematchKind::Sinc { PhasematchModel::Sinc } else { PhasematchModel::Gaussian },
            width: cfg.pm_width.unwrap_or(cfg.sigma),
            orientation: Orientation::CustomAngle(cfg.pm_angle_deg.to_radians()),
        },
    };
    let f = jsa(&pump_envelope(&src.pump(), &grid, &grid)?, &phasematching(&pm, &grid, &grid)?)?;
    let dec = schmidt_decompose(&f, cfg.truncation)?;
    if cfg.write_jsa {
        out.write("jsa.txt", f.to_grid_text().as_bytes())?;
    }
    let mut csv = String::from("k,weight,lambda\n");
    for (k, w) in dec.weights.iter().enumerate() {
        let _ = writeln!(csv, "{k},{w:e},{:e}", w * w);
    }
    let table = json!({"schema": OUTPUT_SCHEMA, "weights": dec.weights, "lambdas": dec.lambdas()});
    out.write_table("weights", &table, &csv)?;
    out.write_json("decomposition.json", &dec.to_json())?;
    let significant = dec.spectrum.iter().filter(|&&w| w > 1e-3).count();
    Ok(json!({
        "retained": dec.truncation,
        "weights_above_1e-3": significant,
        "leading_weights": &dec.weights[..dec.weights.len().min(8)],
        "purity": tmqi::pdc::purity(&dec.weights),
    }))
}

pub fn qpg(cfg: &QpgCommandConfig, out: &mut OutputSet) -> CmdResult {
    let spec = cfg.gate.to_spec()?;
    let d = spec.dim();
    let u = qpg_operator(&spec, d)?;
    let selectivity = match spec.residual_thetas() {
        Some(_) => Some(spec.selectivity()?),
        None => None,
    };
    let mut body = json!({
        "schema": OUTPUT_SCHEMA,
        "dim_red": d,
        "n_green": u.n_green(),
        "theta": spec.theta(),
        "efficiency": spec.efficiency(),
        "selectivity": selectivity,
        "unitarity_residual": unitarity_residual(u.matrix()),
        "operator": serde_rows::rows(u.matrix()),
    });
    if let Some(input) = &cfg.input {
        let v = complex_vec(input);
        if v.len() != d {
            return Err(CliError::Config(format!("qpg.input has {} entries, gate acts on {d} modes", v.len())));
        }
        let output = u.apply_vec(&v)?;
        let converted: f64 = output[d..].iter().map(|z| z.norm_sqr()).sum();
        body["input"] = json!(v);
        body["output"] = json!(output);
        body["conversion_probability"] = json!(converted);
    }
    out.write_json("qpg.json", &body)?;
    Ok(json!({"efficiency": spec.efficiency(), "selectivity": selectivity}))
}

pub fn gates(cfg: &GatesConfig, seed: u64, out: &mut OutputSet) -> CmdResult {
    let mut rows = Vec::new();
    let mut programs = Vec::new();
    for name in &cfg.gates {
        let gate: GateName = name.parse()?;
        let seq = compile_gate(gate);
        let u = evaluate(&seq)?;
        let distance = phase_distance(&u.red_block(), &target_matrix(gate));
        let leakage = green_leakage(&u);
        rows.push(json!({
            "gate": gate.to_string(),
            "primitives": seq.len(),
            "distance": distance,
            "leakage": leakage,
            "pass": distance <= 1e-12 && leakage <= 1e-12,
        }));
        programs.push(json!({"gate": gate.to_string(), "sequence": seq}));
    }
    for k in 0..cfg.random_unitaries {
        let target = haar_unitary(cfg.random_dim, &mut substream(seed, "gates-random", k as u64));
        let seq = compile_qudit_unitary(&target)?;
        let u = evaluate(&seq)?;
        let distance = phase_distance(&u.red_block(), &target);
        let leakage = green_leakage(&u);
        rows.push(json!({
            "gate": format!("random{k}_d{}", cfg.random_dim),
            "primitives": seq.len(),
            "distance": distance,
            "leakage": leakage,
            "pass": distance <= 1e-10 && leakage <= 1e-12,
        }));
    }
    let mut csv = String::from("gate,primitives,distance,leakage,pass\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{:e},{:e},{}", r["gate"].as_str().unwrap_or(""), r["primitives"], r["distance"].as_f64().unwrap_or(f64::NAN), r["leakage"].as_f64().unwrap_or(f64::NAN), r["pass"]);
    }
    let all_pass = rows.iter().all(|r| r["pass"] == json!(true));
    out.write_table("gates", &json!({"schema": OUTPUT_SCHEMA, "rows": rows}), &csv)?;
    out.write_json("programs.json", &json!({"schema": OUTPUT_SCHEMA, "programs": programs}))?;
    Ok(json!({"checked": rows.len(), "all_pass": all_pass}))
}

fn tomo_state(kind: TomoState, dim: usize, seed: u64) -> Result<DensityMatrix, CliError> {
    let mut rng = substream(seed, "tomo-state", 0);
    Ok(match kind {
        TomoState::RandomMixed => DensityMatrix::new(random_density(dim, &mut rng))?,
        TomoState::RandomPure => DensityMatrix::pure(&random_state(dim, &mut rng))?,
        TomoState::MaximallyMixed => DensityMatrix::maximally_mixed(dim)?,
    })
}

pub fn tomo(cfg: &TomoConfig, seed: u64, out: &mut OutputSet) -> CmdResult {
    let mut csv = String::new();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    let residual;
    match cfg.kind {
        TomoKind::Single => {
            let rho = tomo_state(cfg.state, cfg.dim, seed)?;
            let pairs = cfg.pairs.clone().unwrap_or_else(|| {
                (0..cfg.dim).flat_map(|k| (k + 1..cfg.dim).map(move |l| [k, l])).collect()
            });
            let mut settings = Vec::new();
            for [k, l] in pairs {
                settings.extend(standard_cycle(k, l)?);
            }
            let records = run_single_plan(&rho, &settings, cfg.shots, seed)?;
            let est = reconstruct_single(&records)?;
            residual = est.residual;
            csv.push_str("i,j,est_re,est_im,true_re,true_im,abs_err\n");
            for (&(i, j), v) in &est.elements {
                let t = rho.matrix()[(i, j)];
                let err = (v - t).norm();
                worst = worst.max(err);
                let _ = writeln!(csv, "{i},{j},{:e},{:e},{:e},{:e},{err:e}", v.re, v.im, t.re, t.im);
                rows.push(json!({"index": [i, j], "estimate": v, "true": t, "abs_err": err}));
            }
        }
        TomoKind::Biphoton => {
            let (da, db) = (cfg.dim, cfg.dim_b.unwrap_or(cfg.dim));
            let rho = tomo_state(cfg.state, da * db, seed)?;
            let tensor = DensityTensor::from_matrix(da, db, rho.matrix())?;
            let blocks = cfg.blocks.clone().unwrap_or_else(|| {
                let pa: Vec<_> = (0..da).flat_map(|m| (m + 1..da).map(move |n| (m, n))).collect();
                let pb: Vec<_> = (0..db).flat_map(|p| (p + 1..db).map(move |q| (p, q))).collect();
                pa.iter().flat_map(|&(m, n)| pb.iter().map(move |&(p, q)| [m, n, p, q])).collect()
            });
            let mut settings = Vec::new();
            for [m, n, p, q] in blocks {
                settings.extend(biphoton_cycle(m, n, p, q)?);
            }
            let records = run_biphoton_plan(&tensor, &settings, cfg.shots, seed)?;
            let est = reconstruct_biphoton(&records)?;
            residual = est.residual;
            csv.push_str("i,j,k,l,est_re,est_im,true_re,true_im,abs_err\n");
            for (&(i, j, k, l), v) in &est.elements {
                let t = tensor.get(i, j, k, l);
                let err = (v - t).norm();
                worst = worst.max(err);
                let _ = writeln!(csv, "{i},{j},{k},{l},{:e},{:e},{:e},{:e},{err:e}", v.re, v.im, t.re, t.im);
                rows.push(json!({"index": [i, j, k, l], "estimate": v, "true": t, "abs_err": err}));
            }
        }
    }
    let body = json!({
        "schema": OUTPUT_SCHEMA,
        "kind": cfg.kind,
        "shots": cfg.shots,
        "residual": residual,
        "max_abs_error": worst,
        "elements": rows,
    });
    out.write_table("estimate", &body, &csv)?;
    Ok(json!({"elements": rows.len(), "max_abs_error": worst}))
}

pub fn qkd(cfg: &QkdConfig, seed: u64, out: &mut OutputSet) -> CmdResult {
    let n_bases = cfg.n_bases.unwrap_or(if cfg.d == 2 { 2 } else { cfg.d + 1 });
    let mut record = bb84_run(cfg.d, cfg.rounds, n_bases, cfg.eve, seed, cfg.log)?;
    if let Some(csv) = record.rounds_csv() {
        out.write("rounds.csv", csv.as_bytes())?;
    }
    record.rounds = None;
    let theory = match cfg.eve {
        Eve::InterceptResend => Some(qber_theory(cfg.d, n_bases, cfg.eve)?),
        Eve::None => Some(0.0),
    };
    let sigma = theory.map(|q| record.qber_sigma(q));
    let body = json!({"schema": OUTPUT_SCHEMA, "record": record, "qber_theory": theory, "qber_sigma": sigma});
    out.write_json("qkd.json", &body)?;
    Ok(json!({"sifted": record.sifted_length, "qber": record.qber, "qber_theory": theory}))
}

pub fn fuse(cfg: &FuseConfig, seed: u64, out: &mut OutputSet) -> CmdResult {
    let (state, default_slots) = match cfg.preset {
        FusePreset::SymmetricProduct => (MultiQubitState::plus(2), (0, 1)),
        FusePreset::BellPairs => (MultiQubitState::bell().tensor(&MultiQubitState::bell()), (1, 2)),
        FusePreset::Custom => {
            let (Some(n), Some(coeffs)) = (cfg.n, &cfg.coeffs) else {
                return Err(CliError::Config("fuse: the custom preset needs `n` and `coeffs`".into()));
            };
            (MultiQubitState::new(n, complex_vec(coeffs))?, (0, 1))
        }
    };
    let (a, b) = (cfg.slot_a.unwrap_or(default_slots.0), cfg.slot_b.unwrap_or(default_slots.1));
    let dist = fusion_distribution(&state, a, b)?;
    let total: f64 = dist.iter().map(|o| o.probability).sum();
    let sampled = if cfg.sample {
        Some(apply_fusion(&state, a, b, &mut substream(seed, "fuse", 0))?.detector)
    } else {
        None
    };
    let mut csv = String::from("detector,probability\n");
    for o in &dist {
        let _ = writeln!(csv, "{},{:e}", serde_json::to_value(o.detector).unwrap_or_default().as_str().unwrap_or(""), o.probability);
    }
    let body = json!({
        "schema": OUTPUT_SCHEMA,
        "input": state,
        "slots": [a, b],
        "outcomes": dist,
        "total_probability": total,
        "sampled": sampled,
    });
    out.write_table("fusion", &body, &csv)?;
    Ok(json!({"success_probability": dist[0].probability + dist[1].probability, "sampled": sampled}))
}

pub fn cluster(cfg: &ClusterConfig, seed: u64, out: &mut OutputSet) -> CmdResult {
    let stats = cluster_statistics(cfg.target_n, cfg.trials, cfg.bell_supply, cfg.strategy, seed)?;
    let (state, _) =
        grow_linear_cluster_with(cfg.target_n, cfg.bell_supply, cfg.strategy, &mut substream(seed, "cluster", 0))?;
    let check = verify_cluster(&state, cfg.target_n)?;
    out.write_table("trials", &json!({"schema": OUTPUT_SCHEMA, "trials": stats.trials}), &stats.to_csv())?;
    let summary = json!({
        "schema": OUTPUT_SCHEMA,
        "target_n": cfg.target_n,
        "trials": cfg.trials,
        "strategy": cfg.strategy,
        "mean_bell_pairs": stats.mean_pairs(),
        "pairs_per_successful_fusion": stats.pairs_per_success(),
        "fusion_success_fraction": stats.success_fraction(),
        "first_trial_stabilizers": check.stabilizers,
        "first_trial_pass": check.pass,
    });
    out.write_json("summary.json", &summary)?;
    Ok(json!({
        "mean_bell_pairs": stats.mean_pairs(),
        "pairs_per_successful_fusion": stats.pairs_per_success(),
        "stabilizers_pass": check.pass,
    }))
}

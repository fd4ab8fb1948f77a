//! Subcommand implementations. Each handler resolves its parameters
//! against the config file, runs the library, and emits JSON (+ CSV where
//! the command produces per-item rows) through [`Emitter`].

use crate::config::{table_limit_cap, Config};
use crate::output::{Csv, Emitter};
use clap::Args;
use dispersion_lab::cutoff::{
    coprime_psi_sum, poisson_h_threshold, truncated_poisson_ap, SmoothCutoff,
};
use dispersion_lab::discrepancy::{
    admissible_q_window, mean_discrepancy, DiscrepancyParams,
};
use dispersion_lab::dispersion::{
    cauchy_schwarz_bound, compute_uvw, dispersion_expansion_identity,
    main_term_variance_identity,
};
use dispersion_lab::expsums::{
    bezout_reciprocity, kloosterman as kloosterman_sum, kloosterman_fraction_factorization,
    trilinear_form, weil_ratio, weil_sweep, TrilinearInstance,
};
use dispersion_lab::rng::SplitMix64;
use dispersion_lab::sequences::{
    bdh_variance, parse_sequence_pairs, sw_defect, tau_ap_ratio, CoefficientSequence,
    SequenceKind,
};
use dispersion_lab::tables::{gcd, tau2, ArithTables};
use dispersion_lab::titchmarsh::{
    build_dissection, corollary_lhs, corollary_rhs, hyperbola_split,
};
use serde::Serialize;
use serde_json::json;

/// Identity tolerance used by the check commands.
const IDENTITY_REL_TOL: f64 = 1e-9;
/// Acceptance knob for the truncated Poisson residual: |residual| <= KNOB/M.
const POISSON_RESIDUAL_KNOB: f64 = 10.0;
/// Acceptance knob for the coprime residual constant.
const COPRIME_RESIDUAL_KNOB: f64 = 10.0;

fn build_tables(limit: u64, k_max: usize) -> Result<ArithTables, String> {
    let cap = table_limit_cap();
    if limit > cap {
        return Err(format!(
            "sieve limit {limit} exceeds DISPERSION_LAB_TABLE_LIMIT cap {cap}"
        ));
    }
    ArithTables::build(limit, k_max).map_err(|e| e.to_string())
}

/// Build a named coefficient sequence. `kind` is one of constant_one,
/// moebius, tau2, random, file.
#[allow(clippy::too_many_arguments)]
fn build_sequence(
    kind: &str,
    lower: u64,
    order_k: usize,
    seed: u64,
    file: Option<&str>,
    tables: &ArithTables,
) -> Result<CoefficientSequence, String> {
    match kind {
        "random" => CoefficientSequence::random_divisor_bounded(lower, order_k, seed, tables)
            .map_err(|e| e.to_string()),
        "file" => {
            let path = file.ok_or("sequence kind 'file' needs a file path")?;
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("read {path}: {e}"))?;
            let pairs = parse_sequence_pairs(&text).map_err(|e| e.to_string())?;
            CoefficientSequence::from_pairs(lower, &pairs, order_k, tables)
                .map_err(|e| e.to_string())
        }
        named => {
            let k = SequenceKind::parse(named).map_err(|e| e.to_string())?;
            CoefficientSequence::build(k, lower, tables).map_err(|e| e.to_string())
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

// ---------------------------------------------------------------- window

#[derive(Args)]
pub struct WindowArgs {
    /// Support scale M (real; exponent algebra only).
    #[arg(long)]
    m: Option<f64>,
    /// Support scale N.
    #[arg(long)]
    n: Option<f64>,
    /// Epsilon in the window exponents.
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Serialize)]
struct WindowOut {
    command: &'static str,
    m: f64,
    n: f64,
    eps: f64,
    lo: f64,
    hi: f64,
    lo_exponent: f64,
    hi_exponent: f64,
    nonempty: bool,
    n_exponent: f64,
    n_cap_exponent: f64,
    n_below_cap: bool,
}

pub fn window(args: &WindowArgs, config: &Config, out: Option<&str>) -> Result<i32, String> {
    let m = config.resolve(args.m, "m", 1e5)?;
    let n = config.resolve(args.n, "n", 1e5)?;
    let eps = config.resolve(args.eps, "eps", 0.01)?;
    if m < 1.0 || n < 1.0 || eps <= 0.0 {
        return Err("need M, N >= 1 and eps > 0".into());
    }
    let w = admissible_q_window(m, n, eps);
    let payload = WindowOut {
        command: "window",
        m,
        n,
        eps,
        lo: w.lo,
        hi: w.hi,
        lo_exponent: w.lo_exponent,
        hi_exponent: w.hi_exponent,
        nonempty: w.nonempty,
        n_exponent: w.n_exponent,
        n_cap_exponent: w.n_cap_exponent,
        n_below_cap: w.n_below_cap,
    };
    Emitter::new("window", out).finish(
        &payload,
        None,
        json!({"m": m, "n": n, "eps": eps}),
        json!({}),
    )?;
    Ok(0)
}

// ----------------------------------------------------------- discrepancy

#[derive(Args)]
pub struct DiscrepancyArgs {
    /// Scale of the alpha support [M, 2M).
    #[arg(long)]
    m: Option<u64>,
    /// Scale of the beta support [N, 2N).
    #[arg(long)]
    n: Option<u64>,
    /// Start of the dyadic modulus window [Q, 2Q).
    #[arg(long)]
    q: Option<u64>,
    /// Shift a (nonzero, coprime moduli only are counted).
    #[arg(long)]
    a: Option<i64>,
    /// alpha kind: constant_one | moebius | tau2 | random | file.
    #[arg(long)]
    alpha: Option<String>,
    /// beta kind.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    alpha_file: Option<String>,
    #[arg(long)]
    beta_file: Option<String>,
    /// Divisor-bound order for file/random sequences.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct DiscrepancyOut {
    command: &'static str,
    m: u64,
    n: u64,
    q: u64,
    a: i64,
    alpha: String,
    beta: String,
    moduli: usize,
    delta: f64,
    normalized: f64,
}

pub fn discrepancy(
    args: &DiscrepancyArgs,
    config: &Config,
    out: Option<&str>,
) -> Result<i32, String> {
    let m = config.resolve(args.m, "m", 100)?;
    let n = config.resolve(args.n, "n", 100)?;
    let q = config.resolve(args.q, "q", 10)?;
    let a = config.resolve(args.a, "a", 1)?;
    let alpha_kind = config.resolve(args.alpha.clone(), "alpha", "constant_one".to_string())?;
    let beta_kind = config.resolve(args.beta.clone(), "beta", "constant_one".to_string())?;
    let k = config.resolve(args.k, "k", 2)?;
    let seed = config.resolve(args.seed, "seed", 1)?;
    let limit = (2 * m.max(n)).saturating_sub(1);
    let tables = build_tables(limit, k.max(2))?;
    let alpha = build_sequence(&alpha_kind, m, k, seed, args.alpha_file.as_deref(), &tables)?;
    let beta =
        build_sequence(&beta_kind, n, k, seed.wrapping_add(1), args.beta_file.as_deref(), &tables)?;
    let params = DiscrepancyParams { a, q_start: q, m_scale: m, n_scale: n };
    let report = mean_discrepancy(&alpha, &beta, &params).map_err(|e| e.to_string())?;

    let mut csv = Csv::new(&["q", "E", "abs_E"]);
    for &(qi, e) in &report.per_q {
        csv.row(&[qi.to_string(), fmt_f(e), fmt_f(e.abs())]);
    }
    csv.row(&["summary".into(), fmt_f(report.delta), fmt_f(report.normalized)]);

    let payload = DiscrepancyOut {
        command: "discrepancy",
        m,
        n,
        q,
        a,
        alpha: alpha_kind.clone(),
        beta: beta_kind.clone(),
        moduli: report.per_q.len(),
        delta: report.delta,
        normalized: report.normalized,
    };
    Emitter::new("discrepancy", out).finish(
        &payload,
        Some(csv.into_string()),
        json!({"m": m, "n": n, "q": q, "a": a, "alpha": alpha_kind, "beta": beta_kind, "k": k, "seed": seed}),
        json!({}),
    )?;
    Ok(0)
}

// ------------------------------------------------------------ dispersion

#[derive(Args)]
pub struct DispersionArgs {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    a: Option<i64>,
    /// beta kind: constant_one | moebius | tau2 | random | file.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    beta_file: Option<String>,
    /// alpha kind for the Cauchy-Schwarz ratio.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    alpha_file: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exponent in the reported truncation H = Q X^eps / M.
    #[arg(long)]
    eps: Option<f64>,
    /// Zero out beta_n for n dividing the shift.
    #[arg(long, default_value_t = false)]
    filter_shift_divisors: bool,
}

#[derive(Serialize)]
struct DispersionOut {
    command: &'static str,
    n: u64,
    m: u64,
    q: u64,
    a: i64,
    beta: String,
    u: f64,
    v: f64,
    w: f64,
    u_mt: f64,
    v_mt: f64,
    w_mt: f64,
    variance: f64,
    main_term_variance: f64,
    h: f64,
    r: f64,
    identity_rel_gap: f64,
    main_term_identity_rel_gap: f64,
    cs_delta: f64,
    cs_bound: f64,
    cs_ratio: f64,
}

pub fn dispersion(
    args: &DispersionArgs,
    config: &Config,
    out: Option<&str>,
) -> Result<i32, String> {
    let n = config.resolve(args.n, "n", 50)?;
    let m = config.resolve(args.m, "m", 20)?;
    let q = config.resolve(args.q, "q", 10)?;
    let a = config.resolve(args.a, "a", 1)?;
    let beta_kind = config.resolve(args.beta.clone(), "beta", "constant_one".to_string())?;
    let alpha_kind = config.resolve(args.alpha.clone(), "alpha", "constant_one".to_string())?;
    let k = config.resolve(args.k, "k", 2)?;
    let seed = config.resolve(args.seed, "seed", 1)?;
    let eps = config.resolve(args.eps, "eps", 0.01)?;
    let limit = (2 * m.max(n)).saturating_sub(1);
    let tables = build_tables(limit, k.max(2))?;
    let mut beta = build_sequence(&beta_kind, n, k, seed, args.beta_file.as_deref(), &tables)?;
    if args.filter_shift_divisors {
        beta = beta.filter_shift_divisors(a);
    }
    let alpha = build_sequence(&alpha_kind, m, k, seed.wrapping_add(1), args.alpha_file.as_deref(), &tables)?;
    let psi = SmoothCutoff::with_default_tol();

    let terms = compute_uvw(&beta, m, q, a, &psi, eps).map_err(|e| e.to_string())?;
    let identity = dispersion_expansion_identity(&beta, m, q, a, &psi).map_err(|e| e.to_string())?;
    let mt_identity =
        main_term_variance_identity(&beta, m, q, a, &psi).map_err(|e| e.to_string())?;
    let params = DiscrepancyParams { a, q_start: q, m_scale: m, n_scale: n };
    let cs = cauchy_schwarz_bound(&alpha, &beta, &params, &psi, eps).map_err(|e| e.to_string())?;

    let mut csv = Csv::new(&["q", "u", "v", "w"]);
    for c in &terms.per_q {
        csv.row(&[c.q.to_string(), fmt_f(c.u), fmt_f(c.v), fmt_f(c.w)]);
    }

    let payload = DispersionOut {
        command: "dispersion",
        n,
        m,
        q,
        a,
        beta: beta_kind.clone(),
        u: terms.u,
        v: terms.v,
        w: terms.w,
        u_mt: terms.u_mt,
        v_mt: terms.v_mt,
        w_mt: terms.w_mt,
        variance: terms.variance(),
        main_term_variance: terms.main_term_variance(),
        h: terms.h,
        r: terms.r,
        identity_rel_gap: identity.rel_gap,
        main_term_identity_rel_gap: mt_identity.rel_gap,
        cs_delta: cs.delta,
        cs_bound: cs.bound,
        cs_ratio: cs.ratio,
    };
    Emitter::new("dispersion", out).finish(
        &payload,
        Some(csv.into_string()),
        json!({"n": n, "m": m, "q": q, "a": a, "beta": beta_kind, "alpha": alpha_kind, "k": k, "seed": seed, "eps": eps, "filter_shift_divisors": args.filter_shift_divisors}),
        json!({"identity_rel_tol": IDENTITY_REL_TOL}),
    )?;
    let ok = identity.rel_gap <= IDENTITY_REL_TOL
        && mt_identity.rel_gap <= IDENTITY_REL_TOL
        && cs.ratio <= 1.0;
    Ok(if ok { 0 } else { 3 })
}

// ----------------------------------------------------------- kloosterman

#[derive(Args)]
pub struct KloostermanArgs {
    #[arg(long)]
    a: Option<i64>,
    #[arg(long)]
    b: Option<i64>,
    #[arg(long)]
    c: Option<u64>,
    /// Sweep all (a, b) residue pairs for every modulus up to this bound.
    #[arg(long)]
    weil_max: Option<u64>,
}

#[derive(Serialize)]
struct KloostermanOut {
    command: &'static str,
    mode: &'static str,
    a: Option<i64>,
    b: Option<i64>,
    c: Option<u64>,
    re: Option<f64>,
    im: Option<f64>,
    abs: Option<f64>,
    weil_ratio: Option<f64>,
    weil_max: Option<u64>,
    max_ratio: Option<f64>,
    within_bound: bool,
}

pub fn kloosterman(
    args: &KloostermanArgs,
    config: &Config,
    out: Option<&str>,
) -> Result<i32, String> {
    let weil_max = config.resolve_opt(args.weil_max, "weil_max")?;
    if let Some(c_max) = weil_max {
        if c_max == 0 {
            return Err("weil_max must be >= 1".into());
        }
        let rows = weil_sweep(c_max);
        let mut csv = Csv::new(&["c", "max_ratio", "argmax_a", "argmax_b"]);
        let mut worst = 0.0f64;
        for r in &rows {
            csv.row(&[
                r.c.to_string(),
                fmt_f(r.max_ratio),
                r.argmax_a.to_string(),
                r.argmax_b.to_string(),
            ]);
            worst = worst.max(r.max_ratio);
        }
        let payload = KloostermanOut {
            command: "kloosterman",
            mode: "weil-sweep",
            a: None,
            b: None,
            c: None,
            re: None,
            im: None,
            abs: None,
            weil_ratio: None,
            weil_max: Some(c_max),
            max_ratio: Some(worst),
            within_bound: worst <= 1.0,
        };
        Emitter::new("kloosterman", out).finish(
            &payload,
            Some(csv.into_string()),
            json!({"weil_max": c_max}),
            json!({"weil_ratio_max": 1.0}),
        )?;
        return Ok(if worst <= 1.0 { 0 } else { 3 });
    }

    let a = config.resolve(args.a, "a", 1)?;
    let b = config.resolve(args.b, "b", 1)?;
    let c = config.resolve(args.c, "c", 5)?;
    let s = kloosterman_sum(a, b, c).map_err(|e| e.to_string())?;
    let ratio = weil_ratio(a, b, c).map_err(|e| e.to_string())?;
    let payload = KloostermanOut {
        command: "kloosterman",
        mode: "single",
        a: Some(a),
        b: Some(b),
        c: Some(c),
        re: Some(s.re),
        im: Some(s.im),
        abs: Some(s.norm()),
        weil_ratio: Some(ratio),
        weil_max: None,
        max_ratio: None,
        within_bound: ratio <= 1.0,
    };
    Emitter::new("kloosterman", out).finish(
        &payload,
        None,
        json!({"a": a, "b": b, "c": c}),
        json!({"weil_ratio_max": 1.0}),
    )?;
    Ok(if ratio <= 1.0 { 0 } else { 3 })
}

// ------------------------------------------------------------- trilinear

#[derive(Args)]
pub struct TrilinearArgs {
    #[arg(long)]
    theta: Option<i64>,
    #[arg(long)]
    a_scale: Option<u64>,
    #[arg(long)]
    m_scale: Option<u64>,
    #[arg(long)]
    n_scale: Option<u64>,
    /// Coefficients: ones | pm1 (seeded random signs).
    #[arg(long)]
    coeffs: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated list of sizes for a cancellation sweep
    /// (A = M = N = size); emits one CSV row per size.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Serialize)]
struct TrilinearOut {
    command: &'static str,
    theta: i64,
    a_scale: u64,
    m_scale: u64,
    n_scale: u64,
    coeffs: String,
    value_re: f64,
    value_im: f64,
    abs: f64,
    reference_bound: f64,
    reference_bound_mean: f64,
    ratio: f64,
    trivial_bound: f64,
    skipped_pairs: u64,
}

fn trilinear_coeffs(kind: &str, len: u64, rng: &mut SplitMix64) -> Result<Vec<f64>, String> {
    match kind {
        "ones" => Ok(vec![1.0; len as usize]),
        "pm1" => Ok((0..len)
            .map(|_| if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 })
            .collect()),
        other => Err(format!("unknown coeffs kind '{other}' (ones | pm1)")),
    }
}

pub fn trilinear(
    args: &TrilinearArgs,
    config: &Config,
    out: Option<&str>,
) -> Result<i32, String> {
    let theta = config.resolve(args.theta, "theta", 1)?;
    let coeffs = config.resolve(args.coeffs.clone(), "coeffs", "pm1".to_string())?;
    let seed = config.resolve(args.seed, "seed", 1)?;
    let sweep = config.resolve_opt(args.sweep.clone(), "sweep")?;

    let run_one = |a_scale: u64, m_scale: u64, n_scale: u64, seed: u64| -> Result<TrilinearOut, String> {
        let mut rng = SplitMix64::new(seed);
        let inst = TrilinearInstance {
            theta,
            a_scale,
            nu: trilinear_coeffs(&coeffs, a_scale, &mut rng)?,
            m_scale,
            alpha: trilinear_coeffs(&coeffs, m_scale, &mut rng)?,
            n_scale,
            beta: trilinear_coeffs(&coeffs, n_scale, &mut rng)?,
        };
        let r = trilinear_form(&inst).map_err(|e| e.to_string())?;
        Ok(TrilinearOut {
            command: "trilinear",
            theta,
            a_scale,
            m_scale,
            n_scale,
            coeffs: coeffs.clone(),
            value_re: r.value.re,
            value_im: r.value.im,
            abs: r.value.norm(),
            reference_bound: r.reference_bound,
            reference_bound_mean: r.reference_bound_mean,
            ratio: r.ratio,
            trivial_bound: r.trivial_bound,
            skipped_pairs: r.skipped_pairs,
        })
    };

    if let Some(list) = sweep {
        let sizes: Vec<u64> = list
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad sweep size '{t}'")))
            .collect::<Result<_, _>>()?;
        let mut csv =
            Csv::new(&["size", "abs", "trivial_bound", "cancellation", "reference_ratio"]);
        let mut rows = Vec::new();
        for (i, &s) in sizes.iter().enumerate() {
            let r = run_one(s, s, s, seed.wrapping_add(i as u64))?;
            csv.row(&[
                s.to_string(),
                fmt_f(r.abs),
                fmt_f(r.trivial_bound),
                fmt_f(r.abs / r.trivial_bound.max(f64::MIN_POSITIVE)),
                fmt_f(r.ratio),
            ]);
            rows.push(r);
        }
        let ok = rows.iter().all(|r| r.abs <= r.trivial_bound * (1.0 + 1e-12));
        let payload = rows;
        Emitter::new("trilinear", out).finish(
            &payload,
            Some(csv.into_string()),
            json!({"theta": theta, "coeffs": coeffs, "seed": seed, "sweep": sizes}),
            json!({"trivial_bound": "abs <= trivial"}),
        )?;
        return Ok(if ok { 0 } else { 3 });
    }

    let a_scale = config.resolve(args.a_scale, "a_scale", 8)?;
    let m_scale = config.resolve(args.m_scale, "m_scale", 16)?;
    let n_scale = config.resolve(args.n_scale, "n_scale", 16)?;
    let r = run_one(a_scale, m_scale, n_scale, seed)?;
    let ok = r.abs <= r.trivial_bound * (1.0 + 1e-12);
    Emitter::new("trilinear", out).finish(
        &r,
        None,
        json!({"theta": theta, "a_scale": a_scale, "m_scale": m_scale, "n_scale": n_scale, "coeffs": coeffs, "seed": seed}),
        json!({"trivial_bound": "abs <= trivial"}),
    )?;
    Ok(if ok { 0 } else { 3 })
}

// ---------------------------------------------------------- bezout-check

#[derive(Args)]
pub struct BezoutArgs {
    /// Reciprocity trials over random coprime pairs up to 1e9.
    #[arg(long)]
    trials: Option<u64>,
    /// Fraction-factorization trials over random admissible tuples.
    #[arg(long)]
    factorization_trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct BezoutOut {
    command: &'static str,
    trials: u64,
    reciprocity_exact: u64,
    factorization_trials: u64,
    factorization_exact: u64,
    xi_reconstructed: u64,
    all_exact: bool,
}

/// Random admissible factorization tuple with (r, d d1) = 1.
pub fn random_admissible_tuple(rng: &mut SplitMix64) -> (i64, i64, i64, u64, u64, u64, u64) {
    loop {
        let d = rng.gen_range_u64(1, 8);
        let d1 = if d == 1 {
            1
        } else {
            let (p, _) = dispersion_lab::tables::factorize(d)[0];
            match rng.gen_range_u64(0, 2) {
                0 => 1,
                _ => p,
            }
        };
        let nu1p = rng.gen_range_u64(1, 5000);
        if gcd(nu1p, d) != 1 {
            continue;
        }
        let nu2 = rng.gen_range_u64(1, 5000);
        if gcd(d1 * nu1p, nu2) != 1 {
            continue;
        }
        let diff = d1 as i128 * nu1p as i128 - nu2 as i128;
        if diff == 0 {
            continue;
        }
        let diff_abs = diff.unsigned_abs() as u64;
        let mut k = 1;
        let mut candidates = Vec::new();
        while k * k <= diff_abs {
            if diff_abs % k == 0 {
                for r in [k, diff_abs / k] {
                    if gcd(d * d1 * nu1p * r, diff_abs) == r && gcd(r, d * d1) == 1 {
                        candidates.push(r);
                    }
                }
            }
            k += 1;
        }
        if candidates.is_empty() {
            continue;
        }
        candidates.sort_unstable();
        candidates.dedup();
        let r_abs = candidates[(rng.next_u64() % candidates.len() as u64) as usize];
        let r = if diff > 0 { r_abs as i64 } else { -(r_abs as i64) };
        let a = rng.gen_signed_nonzero(1, 100_000);
        let h = rng.gen_signed_nonzero(1, 100_000);
        return (a, h, r, d, d1, nu1p, nu2);
    }
}

pub fn bezout_check(args: &BezoutArgs, config: &Config, out: Option<&str>) -> Result<i32, String> {
    let trials = config.resolve(args.trials, "trials", 100_000)?;
    let fact_trials = config.resolve(args.factorization_trials, "factorization_trials", 10_000)?;
    let seed = config.resolve(args.seed, "seed", 7)?;

    let mut rng = SplitMix64::new(seed);
    let mut reciprocity_exact = 0u64;
    let mut done = 0u64;
    while done < trials {
        let m = rng.gen_range_u64(1, 1_000_000_000);
        let n = rng.gen_range_u64(1, 1_000_000_000);
        if gcd(m, n) != 1 {
            continue;
        }
        let a = rng.gen_signed_nonzero(1, 1_000_000);
        let chk = bezout_reciprocity(a, m, n).map_err(|e| e.to_string())?;
        if chk.exact_match {
            reciprocity_exact += 1;
        }
        done += 1;
    }

    let mut factorization_exact = 0u64;
    let mut xi_reconstructed = 0u64;
    for _ in 0..fact_trials {
        let (a, h, r, d, d1, nu1p, nu2) = random_admissible_tuple(&mut rng);
        let f = kloosterman_fraction_factorization(a, h, r, d, d1, nu1p, nu2)
            .map_err(|e| e.to_string())?;
        if f.exact_match {
            factorization_exact += 1;
        }
        if f.xi_class.xi_from_residues() == Some(f.pieces[0]) {
            xi_reconstructed += 1;
        }
    }

    let all_exact = reciprocity_exact == trials
        && factorization_exact == fact_trials
        && xi_reconstructed == fact_trials;
    let payload = BezoutOut {
        command: "bezout-check",
        trials,
        reciprocity_exact,
        factorization_trials: fact_trials,
        factorization_exact,
        xi_reconstructed,
        all_exact,
    };
    Emitter::new("bezout-check", out).finish(
        &payload,
        None,
        json!({"trials": trials, "factorization_trials": fact_trials, "seed": seed}),
        json!({"exactness": "all trials must match exactly"}),
    )?;
    Ok(if all_exact { 0 } else { 3 })
}

// --------------------------------------------------------- poisson-check

#[derive(Args)]
pub struct PoissonArgs {
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    a: Option<i64>,
    /// Dual truncation; defaults to the smallest admissible value.
    #[arg(long)]
    h: Option<u64>,
    /// Quadrature tolerance for the cutoff transform.
    #[arg(long)]
    quad_tol: Option<f64>,
}

#[derive(Serialize)]
struct PoissonOut {
    command: &'static str,
    m: u64,
    q: u64,
    a: i64,
    h: u64,
    h_threshold: f64,
    truncated_lhs: f64,
    truncated_main: f64,
    truncated_dual: f64,
    truncated_residual: f64,
    residual_budget: f64,
    coprime_lhs: f64,
    coprime_main: f64,
    coprime_residual: f64,
    coprime_constant: f64,
    coprime_budget: f64,
}

pub fn poisson_check(args: &PoissonArgs, config: &Config, out: Option<&str>) -> Result<i32, String> {
    let m = config.resolve(args.m, "m", 1000)?;
    let q = config.resolve(args.q, "q", 3)?;
    let a = config.resolve(args.a, "a", 1)?;
    let quad_tol = config.resolve(args.quad_tol, "quad_tol", 1e-10)?;
    let psi = SmoothCutoff::build(quad_tol).map_err(|e| e.to_string())?;
    let threshold = poisson_h_threshold(m, q);
    let h = match config.resolve_opt(args.h, "h")? {
        Some(v) => v,
        None => threshold.ceil() as u64,
    };
    let truncated = truncated_poisson_ap(&psi, m, q, a, h).map_err(|e| e.to_string())?;
    let coprime = coprime_psi_sum(&psi, m, q);
    let residual_budget = POISSON_RESIDUAL_KNOB / m as f64;
    let coprime_budget = COPRIME_RESIDUAL_KNOB * tau2(q) as f64 * (2.0 * m as f64).ln().powi(4);
    let payload = PoissonOut {
        command: "poisson-check",
        m,
        q,
        a,
        h,
        h_threshold: threshold,
        truncated_lhs: truncated.lhs,
        truncated_main: truncated.main,
        truncated_dual: truncated.dual_sum,
        truncated_residual: truncated.residual,
        residual_budget,
        coprime_lhs: coprime.lhs,
        coprime_main: coprime.main,
        coprime_residual: coprime.residual,
        coprime_constant: coprime.residual_constant,
        coprime_budget,
    };
    Emitter::new("poisson-check", out).finish(
        &payload,
        None,
        json!({"m": m, "q": q, "a": a, "h": h, "quad_tol": quad_tol}),
        json!({"residual_knob": POISSON_RESIDUAL_KNOB, "coprime_knob": COPRIME_RESIDUAL_KNOB}),
    )?;
    let ok = truncated.residual.abs() <= residual_budget
        && coprime.residual.abs() <= coprime_budget;
    Ok(if ok { 0 } else { 3 })
}

// -------------------------------------------------------------- sw-check

#[derive(Args)]
pub struct SwArgs {
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    beta_file: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    a: Option<i64>,
    /// Coprimality filter r.
    #[arg(long)]
    r: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SwOut {
    command: &'static str,
    beta: String,
    n: u64,
    q: u64,
    a: i64,
    r: u64,
    defect: f64,
    defect_over_n: f64,
}

pub fn sw_check(args: &SwArgs, config: &Config, out: Option<&str>) -> Result<i32, String> {
    let n = config.resolve(args.n, "n", 1000)?;
    let q = config.resolve(args.q, "q", 3)?;
    let a = config.resolve(args.a, "a", 1)?;
    let r = config.resolve(args.r, "r", 1)?;
    let k = config.resolve(args.k, "k", 2)?;
    let seed = config.resolve(args.seed, "seed", 1)?;
    let beta_kind = config.resolve(args.beta.clone(), "beta", "moebius".to_string())?;
    let tables = build_tables(2 * n - 1, k.max(2))?;
    let beta = build_sequence(&beta_kind, n, k, seed, args.beta_file.as_deref(), &tables)?;
    let defect = sw_defect(&beta, q, a, r).map_err(|e| e.to_string())?;
    let payload = SwOut {
        command: "sw-check",
        beta: beta_kind.clone(),
        n,
        q,
        a,
        r,
        defect,
        defect_over_n: defect / n as f64,
    };
    Emitter::new("sw-check", out).finish(
        &payload,
        None,
        json!({"beta": beta_kind, "n": n, "q": q, "a": a, "r": r, "k": k, "seed": seed}),
        json!({}),
    )?;
    Ok(0)
}

// ------------------------------------------------------------------- bdh

#[derive(Args)]
pub struct BdhArgs {
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    beta_file: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    q_max: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct BdhOut {
    command: &'static str,
    beta: String,
    n: u64,
    q_max: u64,
    variance: f64,
    variance_over_n_log_n: f64,
}

pub fn bdh(args: &BdhArgs, config: &Config, out: Option<&str>) -> Result<i32, String> {
    let n = config.resolve(args.n, "n", 10_000)?;
    let q_max = config.resolve(args.q_max, "q_max", 100)?;
    let k = config.resolve(args.k, "k", 2)?;
    let seed = config.resolve(args.seed, "seed", 1)?;
    let beta_kind = config.resolve(args.beta.clone(), "beta", "moebius".to_string())?;
    if q_max > n {
        return Err("need Q_max <= N".into());
    }
    let tables = build_tables(2 * n - 1, k.max(2))?;
    let beta = build_sequence(&beta_kind, n, k, seed, args.beta_file.as_deref(), &tables)?;
    let variance = bdh_variance(&beta, q_max);
    let payload = BdhOut {
        command: "bdh",
        beta: beta_kind.clone(),
        n,
        q_max,
        variance,
        variance_over_n_log_n: variance / (n as f64 * (n as f64).ln()),
    };
    Emitter::new("bdh", out).finish(
        &payload,
        None,
        json!({"beta": beta_kind, "n": n, "q_max": q_max, "k": k, "seed": seed}),
        json!({}),
    )?;
    Ok(0)
}

// ---------------------------------------------------------------- tau-ap

#[derive(Args)]
pub struct TauApArgs {
    #[arg(long)]
    x: Option<u64>,
    #[arg(long)]
    y: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Serialize)]
struct TauApOut {
    command: &'static str,
    x: u64,
    y: u64,
    q: u64,
    a: u64,
    k: usize,
    sum: u64,
    bound_ratio: f64,
}

pub fn tau_ap(args: &TauApArgs, config: &Config, out: Option<&str>) -> Result<i32, String> {
    let x = config.resolve(args.x, "x", 10_000)?;
    let y = config.resolve(args.y, "y", 1000)?;
    let q = config.resolve(args.q, "q", 3)?;
    let a = config.resolve(args.a, "a", 1)?;
    let k = config.resolve(args.k, "k", 2)?;
    let tables = build_tables(x, k.max(2))?;
    let r = tau_ap_ratio(x, y, q, a, k, &tables).map_err(|e| e.to_string())?;
    let payload = TauApOut {
        command: "tau-ap",
        x,
        y,
        q,
        a,
        k,
        sum: r.sum,
        bound_ratio: r.bound_ratio,
    };
    Emitter::new("tau-ap", out).finish(
        &payload,
        None,
        json!({"x": x, "y": y, "q": q, "a": a, "k": k}),
        json!({}),
    )?;
    Ok(0)
}

// ------------------------------------------------------------ titchmarsh

#[derive(Args)]
pub struct TitchmarshArgs {
    /// Product scale X; supports are M = X^{1/2-delta}, N = X^{1/2+delta}.
    #[arg(long)]
    x: Option<u64>,
    /// Shape exponent delta; the admissible range is 0 < delta < 1/112.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha_kind: Option<String>,
    #[arg(long)]
    beta_kind: Option<String>,
    #[arg(long)]
    alpha_file: Option<String>,
    #[arg(long)]
    beta_file: Option<String>,
    /// Dissection exponent B.
    #[arg(long)]
    b: Option<u32>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct GridStats {
    l0: u64,
    delta: f64,
    cells: u128,
    e0_cells: u128,
}

#[derive(Serialize)]
struct TitchmarshOut {
    command: &'static str,
    x: u64,
    shape_delta: f64,
    m: u64,
    n: u64,
    alpha: String,
    beta: String,
    lhs: f64,
    rhs: f64,
    s0: f64,
    s1: f64,
    square_correction: f64,
    reassembled: f64,
    split_rel_gap: f64,
    abs_dev: f64,
    rel_dev: f64,
    grid: GridStats,
}

pub fn titchmarsh(
    args: &TitchmarshArgs,
    config: &Config,
    out: Option<&str>,
) -> Result<i32, String> {
    let x = config.resolve(args.x, "x", 10_000)?;
    let delta = config.resolve(args.delta, "delta", 0.005)?;
    let b = config.resolve(args.b, "b", 1)?;
    let k = config.resolve(args.k, "k", 2)?;
    let seed = config.resolve(args.seed, "seed", 1)?;
    let alpha_kind =
        config.resolve(args.alpha_kind.clone(), "alpha_kind", "constant_one".to_string())?;
    let beta_kind =
        config.resolve(args.beta_kind.clone(), "beta_kind", "constant_one".to_string())?;
    if x < 4 {
        return Err("need X >= 4".into());
    }
    if !(0.0 < delta && delta < 1.0 / 112.0) {
        eprintln!(
            "warning: delta = {delta} outside the admissible range (0, {:.6})",
            1.0 / 112.0
        );
    }
    let xf = x as f64;
    let m = xf.powf(0.5 - delta).round() as u64;
    let n = xf.powf(0.5 + delta).round() as u64;
    let table_limit = (2 * m - 1) * (2 * n - 1) - 1;
    let tables = build_tables(table_limit, k.max(2))?;
    let alpha = build_sequence(&alpha_kind, m, k, seed, args.alpha_file.as_deref(), &tables)?;
    let beta =
        build_sequence(&beta_kind, n, k, seed.wrapping_add(1), args.beta_file.as_deref(), &tables)?;

    let lhs = corollary_lhs(&alpha, &beta, &tables).map_err(|e| e.to_string())?;
    let rhs = corollary_rhs(&alpha, &beta);
    let split = hyperbola_split(&alpha, &beta).map_err(|e| e.to_string())?;
    let grid = build_dissection(m, n, b).map_err(|e| e.to_string())?;
    let abs_dev = (lhs - rhs).abs();
    let split_rel_gap = (split.reassembled - lhs).abs() / lhs.abs().max(1.0);
    let payload = TitchmarshOut {
        command: "titchmarsh",
        x,
        shape_delta: delta,
        m,
        n,
        alpha: alpha_kind.clone(),
        beta: beta_kind.clone(),
        lhs,
        rhs,
        s0: split.s0,
        s1: split.s1,
        square_correction: split.square_correction,
        reassembled: split.reassembled,
        split_rel_gap,
        abs_dev,
        rel_dev: abs_dev / lhs.abs().max(1.0),
        grid: GridStats {
            l0: grid.l0,
            delta: grid.delta,
            cells: grid.cell_count(),
            e0_cells: grid.e0_count(),
        },
    };
    Emitter::new("titchmarsh", out).finish(
        &payload,
        None,
        json!({"x": x, "delta": delta, "alpha_kind": alpha_kind, "beta_kind": beta_kind, "b": b, "k": k, "seed": seed}),
        json!({"split_rel_tol": IDENTITY_REL_TOL}),
    )?;
    Ok(if split_rel_gap <= IDENTITY_REL_TOL { 0 } else { 3 })
}


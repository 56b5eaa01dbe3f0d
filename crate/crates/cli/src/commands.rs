use crate::config::{parse_grid, parse_n_grid, RunConfig};
use crate::output::{dat, Report};
use serde_json::{json, Value};
use stablab::gclt::{
    ordering_experiment, rate_experiment, theoretical_bound, write_rate_table, Estimator, OrderingConfig,
    RateExperimentConfig, SourceLaw, TriangularArray,
};
use stablab::ou_stein::{functions, regularity_report, suite_function, FnRef, RegularityOptions, SteinBank, SteinSolverConfig};
use stablab::rate::linear_fit;
use stablab::rng::from_seed;
use stablab::sampler::{cf_check, density_by_cf_inversion, sample_batch, suggested_spacing, SamplerMethod, StableSamplerConfig};
use stablab::spectral::{cf_probe_set, SpectralMeasure, StableLaw};
use stablab::{Error, Result};
use std::sync::Arc;

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

// every field below is filled by RunConfig::resolve
fn req<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().ok_or_else(|| cfg_err(format!("missing {name}")))
}

pub fn build_law(cfg: &RunConfig) -> Result<StableLaw> {
    let alpha = req(&cfg.law.alpha, "law.alpha")?;
    match &cfg.law.measure {
        Some(spec) => StableLaw::new(alpha, SpectralMeasure::new(spec.clone())?),
        None => StableLaw::preset(alpha, &req(&cfg.law.spectral, "law.spectral")?, req(&cfg.law.d, "law.d")?),
    }
}

fn law_label(cfg: &RunConfig) -> String {
    cfg.law.spectral.clone().unwrap_or_else(|| "custom".into())
}

fn build_source(cfg: &RunConfig, law: StableLaw) -> Result<SourceLaw> {
    let s = &cfg.source;
    match req(&s.example, "source.example")?.as_str() {
        "pareto" => Ok(SourceLaw::paretian(law)),
        "modified-tail" => SourceLaw::modified_tail(law, req(&s.a, "source.a")?, req(&s.beta, "source.beta")?, req(&s.profile, "source.profile")?),
        "log-modified" => SourceLaw::log_modified(law, req(&s.beta, "source.beta")?),
        other => Err(cfg_err(format!("source example '{other}' has no single source law"))),
    }
}

fn estimator(cfg: &RunConfig) -> Result<Estimator> {
    match req(&cfg.rate.estimator, "rate.estimator")?.as_str() {
        "exact" => Ok(Estimator::Exact),
        "sliced" => Ok(Estimator::Sliced { projections: req(&cfg.rate.projections, "rate.projections")? }),
        other => Err(cfg_err(format!("unknown estimator '{other}'"))),
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    match cfg.command.as_deref().unwrap_or_default() {
        "psi" => psi(cfg),
        "sample" => sample(cfg),
        "stein-check" => stein(cfg, true),
        "regularity" => stein(cfg, false),
        "rate" if cfg.source.example.as_deref() == Some("ordering") => ordering(cfg),
        "rate" => rate(cfg),
        "bound" => bound(cfg),
        "density" => density(cfg),
        other => Err(cfg_err(format!("unknown command '{other}'"))),
    }
}

fn psi(cfg: &RunConfig) -> Result<Report> {
    let law = build_law(cfg)?;
    let z = req(&cfg.psi.z, "psi.z")?;
    let e = law.psi(&z)?;
    let mut r = Report {
        summary: json!({
            "alpha": law.alpha(),
            "d_alpha": law.d_alpha(),
            "z": z,
            "re": e.value.re,
            "im": e.value.im,
            "budget": e.budget,
        }),
        ..Default::default()
    };
    r.line(format!("psi({z:?}) = {} + {}i  (quadrature budget {})", e.value.re, e.value.im, e.budget));
    Ok(r)
}

fn sample(cfg: &RunConfig) -> Result<Report> {
    let law = build_law(cfg)?;
    let seed = req(&cfg.seed, "seed")?;
    let s = &cfg.sample;
    let method = match req(&s.method, "sample.method")?.as_str() {
        "direction-quadrature" => SamplerMethod::DirectionQuadrature,
        "series-oracle" => SamplerMethod::SeriesOracle,
        other => return Err(cfg_err(format!("unknown sampler method '{other}'"))),
    };
    let scfg = StableSamplerConfig { method, series_terms: req(&s.series_terms, "sample.series_terms")?, cf_check_frequencies: vec![] };
    let count = req(&s.count, "sample.count")?;
    if count < 2 {
        return Err(cfg_err("sample.count must be at least 2"));
    }
    let draws = sample_batch(&law, &scfg, count, &mut from_seed(seed))?;
    let report = cf_check(&law, &draws, &cf_probe_set(law.dim()))?;
    let method_name = req(&s.method, "sample.method")?;
    let mut csv = format!("# alpha={} spectral={} seed={seed} method={method_name}\n", law.alpha(), law_label(cfg));
    let header: Vec<String> = (1..=law.dim()).map(|i| format!("x{i}")).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for x in &draws {
        let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let mut r = Report { summary: json!({ "count": count, "method": method_name, "cf_check": report }), ..Default::default() };
    r.add("samples.csv", csv.into_bytes());
    r.line(format!("{count} draws, method {method_name}, seed {seed}"));
    r.line(format!(
        "CF check: max deviation {:.3e} vs tolerance {:.3e} (quadrature budget {:.3e}) -> {}",
        report.max_deviation,
        report.tolerance,
        report.quadrature_budget,
        if report.pass { "PASS" } else { "FAIL" }
    ));
    Ok(r)
}

fn test_function(name: &str, d: usize) -> Result<FnRef> {
    match name {
        "squared-norm" => Ok(functions::squared_norm()),
        other => suite_function(other, d),
    }
}

fn stein(cfg: &RunConfig, single: bool) -> Result<Report> {
    let law = build_law(cfg)?;
    let d = law.dim();
    let seed = req(&cfg.seed, "seed")?;
    let s = &cfg.stein;
    let names = req(&s.h, "stein.h")?;
    let names: Vec<&str> = names.split(',').map(str::trim).collect();
    if single && names.len() != 1 {
        return Err(cfg_err("stein-check takes exactly one test function"));
    }
    let suite = names.iter().map(|n| test_function(n, d)).collect::<Result<Vec<_>>>()?;
    let solver = SteinSolverConfig {
        time_truncation: req(&s.time_truncation, "stein.time_truncation")?,
        time_samples: req(&s.time_samples, "stein.time_samples")?,
        mc_per_time: req(&s.mc_per_time, "stein.mc_per_time")?,
        pi_h_samples: req(&s.pi_h_samples, "stein.pi_h_samples")?,
        fd_step: req(&s.fd_step, "stein.fd_step")?,
        tolerance: req(&s.tolerance, "stein.tolerance")?,
        laplacian_samples: req(&s.laplacian_samples, "stein.laplacian_samples")?,
        ..SteinSolverConfig::default()
    };
    let opts = RegularityOptions {
        grid: parse_grid(&req(&s.grid, "stein.grid")?, d, (10, 3.0))?,
        hessian_grid: parse_grid(&req(&s.hessian_grid, "stein.hessian_grid")?, d, (6, 3.0))?,
        pairs: RegularityOptions::random_pairs(d, req(&s.pairs, "stein.pairs")?, 0.1, 4.0, seed),
        grad_slack: req(&s.grad_slack, "stein.grad_slack")?,
    };
    let bank = Arc::new(SteinBank::new(&law, solver, seed)?);
    let report = regularity_report(bank, &suite, &opts)?;
    let mut r = Report::default();
    for f in &report.functions {
        r.line(format!(
            "{}: max|grad f| = {:.4} (stderr {:.1e}, budget {:.1e}) vs bound {:.4} -> {}; Holder max quotient {:.4} vs constant {:.4} -> {}",
            f.name,
            f.max_grad,
            f.max_grad_stderr,
            f.max_grad_budget,
            f.grad_bound,
            if f.grad_bound_ok { "ok" } else { "VIOLATED" },
            f.max_holder_quotient,
            f.holder_constant,
            if f.holder_ok { "ok" } else { "VIOLATED" },
        ));
    }
    r.add_json("regularity.json", &report)?;
    r.summary = if single {
        let mut v = serde_json::to_value(&report.functions[0])?;
        if let Value::Object(m) = &mut v {
            m.insert("alpha".into(), json!(report.alpha));
            m.insert("d_alpha".into(), json!(report.d_alpha));
            m.insert("all_ok".into(), json!(report.all_ok));
        }
        v
    } else {
        serde_json::to_value(&report)?
    };
    Ok(r)
}

fn rate(cfg: &RunConfig) -> Result<Report> {
    let law = build_law(cfg)?;
    let source = build_source(cfg, law)?;
    let rs = &cfg.rate;
    let rcfg = RateExperimentConfig {
        n_grid: parse_n_grid(&req(&rs.n, "rate.n")?)?,
        replicas: req(&rs.replicas, "rate.replicas")?,
        estimator: estimator(cfg)?,
        cloud_cap: req(&rs.cloud_cap, "rate.cloud_cap")?,
        seed: req(&cfg.seed, "seed")?,
        null_model: req(&rs.null_model, "rate.null_model")?,
        scale: 1.0,
        fit_model: rs.fit_model,
        allow_log_rate_fit: req(&rs.allow_log_rate_fit, "rate.allow_log_rate_fit")?,
        threads: req(&cfg.threads, "threads")?,
    };
    let exp = rate_experiment(&source, &rcfg)?;
    let mut r = Report::default();
    let mut table = Vec::new();
    write_rate_table(&exp.rows, &mut table)?;
    r.add("rate.csv", table);
    r.add(
        "rate.dat",
        dat("log_n log_mean_distance", exp.levels.iter().map(|l| ((l.n as f64).ln(), l.mean_distance.ln()))),
    );
    if let Some(fit) = &exp.fit {
        let fitted = exp.levels.iter().zip(&fit.residuals).map(|(l, res)| ((l.n as f64).ln(), l.mean_distance.ln() - res));
        r.add("rate_fit.dat", dat(&format!("log_n fitted_log_distance ({:?} model)", fit.model), fitted));
    }
    r.summary = json!({
        "example": cfg.source.example,
        "source": source.kind(),
        "estimator": rcfg.estimator,
        "seed": rcfg.seed,
        "levels": exp.levels,
        "fit": exp.fit,
        "fit_refused": exp.fit_refused,
        "predicted": exp.predicted,
        "predicted_label": exp.predicted_label,
        "predicted_exponent": exp.predicted_exponent,
        "prefactor_spread": exp.prefactor_spread,
        "note": "bounds are reported up to an unspecified constant C(alpha, d)",
    });
    r.add_json("rate.json", &r.summary.clone())?;
    r.line(format!("rate experiment, example {}, seed {}", cfg.source.example.as_deref().unwrap_or(""), rcfg.seed));
    for l in &exp.levels {
        r.line(format!("n = {:>8}  mean W1 = {:.5e} +- {:.1e}  bound = {:.4e}  ratio = {:.4}", l.n, l.mean_distance, l.stderr, l.bound, l.distance_over_bound));
    }
    match (&exp.fit, &exp.fit_refused) {
        (Some(f), _) => {
            let p = f.slope();
            r.line(format!(
                "fitted {} = {:.4} +- {:.4} (95% CI [{:.4}, {:.4}]), R^2 = {:.4}; predicted {}",
                p.name, p.value, p.stderr, p.ci95.0, p.ci95.1, f.r_squared, exp.predicted_label
            ));
        }
        (None, Some(why)) => r.line(format!("no fit: {why}")),
        _ => {}
    }
    Ok(r)
}

fn ordering(cfg: &RunConfig) -> Result<Report> {
    let law = build_law(cfg)?;
    let s = &cfg.source;
    let ocfg = OrderingConfig {
        a: req(&s.a, "source.a")?,
        beta_slow: req(&s.beta, "source.beta")?,
        beta_fast: req(&s.beta_fast, "source.beta_fast")?,
        n_grid: parse_n_grid(&req(&cfg.rate.n, "rate.n")?)?,
        replicas: req(&cfg.rate.replicas, "rate.replicas")?,
        estimator: estimator(cfg)?,
        seed: req(&cfg.seed, "seed")?,
        min_n: req(&cfg.rate.min_n, "rate.min_n")?,
        threads: req(&cfg.threads, "threads")?,
    };
    let res = ordering_experiment(&law, &ocfg)?;
    let mut r = Report::default();
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &res.rows {
        w.serialize(row)?;
    }
    r.add("ordering.csv", w.into_inner().map_err(|e| Error::Io(e.into_error()))?);
    // binomial standard error of the fraction
    let k = res.counted as f64;
    let se = if k > 0.0 { (res.fraction * (1.0 - res.fraction) / k).sqrt() } else { f64::NAN };
    r.summary = json!({
        "config": ocfg,
        "fraction_slow_above_fast": res.fraction,
        "fraction_stderr": se,
        "counted": res.counted,
    });
    r.add_json("ordering.json", &r.summary.clone())?;
    r.line(format!(
        "beta {} vs {}: slower source has the larger distance in {:.1}% of {} paired replicates (n >= {})",
        ocfg.beta_slow,
        ocfg.beta_fast,
        100.0 * res.fraction,
        res.counted,
        ocfg.min_n
    ));
    Ok(r)
}

fn bound(cfg: &RunConfig) -> Result<Report> {
    let law = build_law(cfg)?;
    let source = build_source(cfg, law)?;
    let grid = parse_n_grid(&req(&cfg.bound.n, "bound.n")?)?;
    let bounds = grid
        .iter()
        .map(|&n| theoretical_bound(&TriangularArray::new(source.clone(), n)?, cfg.bound.cutoff))
        .collect::<Result<Vec<_>>>()?;
    let log_source = matches!(source.kind(), stablab::gclt::SourceKind::LogModified { .. });
    let x: Vec<f64> = grid.iter().map(|&n| if log_source { (n as f64).ln().ln() } else { (n as f64).ln() }).collect();
    let y: Vec<f64> = bounds.iter().map(|b| b.value.ln()).collect();
    let mut r = Report::default();
    let shape = if grid.len() >= 2 {
        let (a, b, r2) = linear_fit(&x, &y);
        Some(json!({ "abscissa": if log_source { "log log n" } else { "log n" }, "intercept": a, "slope": b, "r_squared": r2 }))
    } else {
        None
    };
    r.add("bound.dat", dat(if log_source { "log_log_n log_bound" } else { "log_n log_bound" }, x.iter().copied().zip(y.iter().copied())));
    r.summary = json!({ "example": cfg.source.example, "source": source.kind(), "bounds": bounds, "shape_fit": shape });
    r.add_json("bound.json", &r.summary.clone())?;
    for b in &bounds {
        r.line(format!("n = {:e}: bound = {:.6e} (quadrature error {:.1e}), predicted {} = {:.6e}", b.n as f64, b.value, b.error, b.predicted_label, b.predicted.value(b.n as f64)));
    }
    if let Some(s) = &shape {
        r.line(format!("log bound vs {}: slope {}", s["abscissa"].as_str().unwrap_or(""), s["slope"]));
    }
    Ok(r)
}

fn density(cfg: &RunConfig) -> Result<Report> {
    let law = build_law(cfg)?;
    let points = req(&cfg.density.points, "density.points")?;
    let h = cfg.density.spacing.unwrap_or_else(|| suggested_spacing(&law));
    let t = density_by_cf_inversion(&law, points, h)?;
    let mut csv = String::from("x,y,density\n");
    for i in 0..t.n {
        for j in 0..t.n {
            csv.push_str(&format!("{},{},{}\n", t.coordinate(i), t.coordinate(j), t.at(i, j)));
        }
    }
    let mut r = Report::default();
    r.add("density.csv", csv.into_bytes());
    r.summary = json!({
        "points": t.n,
        "spacing": t.spacing,
        "half_width": t.half_width,
        "lattice_mass": t.lattice_mass,
        "mass_error": (t.lattice_mass - 1.0).abs(),
        "nyquist_residual": t.nyquist_residual,
    });
    r.line(format!("{}x{} lattice, spacing {}, mass {} , Nyquist residual {:.1e}", t.n, t.n, t.spacing, t.lattice_mass, t.nyquist_residual));
    Ok(r)
}

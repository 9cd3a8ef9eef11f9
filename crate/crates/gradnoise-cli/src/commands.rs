//! The six subcommands: argument resolution, library dispatch, rendering.

use gradnoise::linsys::{self, AlgorithmSpec, Method, QuadraticSpectrum};
use gradnoise::tradeoff::{self, Provenance, SpectrumInput, TradeoffMode};
use gradnoise::{cert, quad, sim, Error};
use nalgebra::DVector;

use crate::args::{
    self, Cli, Command, CommonArgs, FormatArg, ObjectiveArg, SimulateArgs,
};
use crate::report::{
    self, AnalyzeReport, CertifyReport, CurvePoint, CurveReport, ParetoReport, SimulateReport,
    StabilityReport,
};
use crate::CmdError;

/// Grid resolution of the AG trade-off optimizers (refined afterwards, so
/// moderate counts suffice).
const GRID_ALPHA: usize = 40;
const GRID_BETA: usize = 40;
/// Grid resolution of the per-eps certification SDP sweep.
const SDP_GRID: usize = 16;

/// What a command wants done with the outside world; `run` performs the IO.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: Option<String>,
    pub files: Vec<(String, String)>,
    pub exit: i32,
}

pub fn execute(cli: Cli) -> Result<Outcome, CmdError> {
    match cli.command {
        Command::Analyze(mut c) => {
            args::merge_config(&mut c, None)?;
            cmd_analyze(&c)
        }
        Command::Stability(mut c) => {
            args::merge_config(&mut c, None)?;
            cmd_stability(&c)
        }
        Command::Tradeoff(mut c) => {
            args::merge_config(&mut c, None)?;
            cmd_tradeoff(&c)
        }
        Command::Certify(mut c) => {
            args::merge_config(&mut c, None)?;
            cmd_certify(&c)
        }
        Command::Simulate(mut s) => {
            args::merge_config(&mut s.common, Some(&mut s.extra))?;
            cmd_simulate(&s)
        }
        Command::Pareto(mut c) => {
            args::merge_config(&mut c, None)?;
            cmd_pareto(&c)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared resolution of flags into library inputs.

fn finish(c: &CommonArgs, text: String, mut files: Vec<(String, String)>, exit: i32) -> Outcome {
    let stdout = match &c.out {
        Some(path) => {
            files.push((path.clone(), text));
            None
        }
        None => Some(text),
    };
    Outcome {
        stdout,
        files,
        exit,
    }
}

fn fmt_of(c: &CommonArgs) -> FormatArg {
    c.format.unwrap_or(FormatArg::Table)
}

fn need_method(c: &CommonArgs) -> Result<Method, CmdError> {
    c.method
        .map(|m| m.to_method())
        .ok_or_else(|| CmdError::usage("--method is required"))
}

/// Builds the validated `(alpha, beta)` point; GD accepts `--beta 0` only.
fn build_spec(method: Method, c: &CommonArgs) -> Result<AlgorithmSpec, CmdError> {
    let alpha = c
        .alpha
        .ok_or_else(|| CmdError::usage("--alpha is required"))?;
    match method {
        Method::Gd => {
            if let Some(b) = c.beta {
                if b != 0.0 {
                    return Err(CmdError::usage(
                        "--beta requires --method ag (gd accepts only --beta 0)",
                    ));
                }
            }
            Ok(AlgorithmSpec::gd(alpha)?)
        }
        Method::Ag => {
            let beta = c
                .beta
                .ok_or_else(|| CmdError::usage("--beta is required for --method ag"))?;
            Ok(AlgorithmSpec::ag(alpha, beta)?)
        }
    }
}

/// Problem description: an explicit spectrum, or just its endpoints.
enum SpecSource {
    Explicit(QuadraticSpectrum),
    Endpoints { mu: f64, l: f64, d: Option<usize> },
}

fn resolve_source(c: &CommonArgs) -> Result<SpecSource, CmdError> {
    if let Some(list) = &c.spectrum {
        if c.mu.is_some() || c.l.is_some() || c.d.is_some() {
            return Err(CmdError::usage(
                "--spectrum excludes --mu/--L/--d (the spectrum determines them)",
            ));
        }
        let eigenvalues = args::parse_spectrum(list)?;
        return Ok(SpecSource::Explicit(QuadraticSpectrum::new(eigenvalues)?));
    }
    let (Some(mu), Some(l)) = (c.mu, c.l) else {
        return Err(CmdError::usage("need --spectrum, or --mu and --L"));
    };
    if !(mu.is_finite() && l.is_finite() && 0.0 < mu && mu <= l) {
        return Err(CmdError::usage(format!(
            "need 0 < mu <= L, got mu = {mu}, L = {l}"
        )));
    }
    Ok(SpecSource::Endpoints { mu, l, d: c.d })
}

fn scalars(src: &SpecSource) -> (f64, f64) {
    match src {
        SpecSource::Explicit(s) => (s.mu(), s.l()),
        SpecSource::Endpoints { mu, l, .. } => (*mu, *l),
    }
}

/// Class dimension for certification bounds; defaults to 1 when only
/// endpoints are given (the bounds scale linearly in `d`).
fn class_dim(src: &SpecSource) -> usize {
    match src {
        SpecSource::Explicit(s) => s.d(),
        SpecSource::Endpoints { d, .. } => d.unwrap_or(1),
    }
}

/// Commands computing exact spectral sums need the full eigenvalue list;
/// endpoints plus `--d` stand in for the worst-case two-point spectrum.
fn full_spectrum(src: &SpecSource) -> Result<QuadraticSpectrum, CmdError> {
    match src {
        SpecSource::Explicit(s) => Ok(s.clone()),
        SpecSource::Endpoints { mu, l, d } => {
            let d = d.ok_or_else(|| {
                CmdError::usage("this command needs a full spectrum: add --d, or give --spectrum")
            })?;
            if d == 1 {
                if (l - mu).abs() > f64::EPSILON * l {
                    return Err(CmdError::usage(
                        "--d 1 with distinct --mu/--L is ambiguous; give --spectrum",
                    ));
                }
                return Ok(QuadraticSpectrum::new(vec![*l])?);
            }
            Ok(QuadraticSpectrum::two_point(*mu, *l, d)?)
        }
    }
}

/// A sweep of the trade-off parameter, from the four mutually exclusive
/// sweep flags.
enum Sweep {
    Tau(Vec<f64>),
    Eps(Vec<f64>),
}

fn resolve_sweep(c: &CommonArgs, default_tau: bool) -> Result<Option<Sweep>, CmdError> {
    let given = [
        c.tau.is_some(),
        c.tau_grid.is_some(),
        c.eps.is_some(),
        c.eps_grid.is_some(),
    ];
    if given.iter().filter(|b| **b).count() > 1 {
        return Err(CmdError::usage(
            "give at most one of --tau, --tau-grid, --eps, --eps-grid",
        ));
    }
    if let Some(tau) = c.tau {
        return Ok(Some(Sweep::Tau(vec![tau])));
    }
    if let Some(grid) = &c.tau_grid {
        let (lo, hi, n) = args::parse_grid(grid)?;
        if n == 0 {
            return Err(CmdError::Lib(Error::EmptyGrid));
        }
        if lo <= 0.0 {
            return Err(CmdError::usage("tau grid is log-spaced and needs LO > 0"));
        }
        return Ok(Some(Sweep::Tau(tradeoff::log_grid(lo, hi, n))));
    }
    if let Some(eps) = c.eps {
        return Ok(Some(Sweep::Eps(vec![eps])));
    }
    if let Some(grid) = &c.eps_grid {
        let (lo, hi, n) = args::parse_grid(grid)?;
        if n == 0 {
            return Err(CmdError::Lib(Error::EmptyGrid));
        }
        return Ok(Some(Sweep::Eps(tradeoff::linear_grid(lo, hi, n))));
    }
    Ok(if default_tau {
        Some(Sweep::Tau(tradeoff::default_tau_grid()))
    } else {
        None
    })
}

fn provenance_str(p: Provenance) -> &'static str {
    match p {
        Provenance::ExactQuad => "exact-quad",
        Provenance::UpperBound => "upper-bound",
        Provenance::SdpCert => "sdp-cert",
    }
}

// ---------------------------------------------------------------------------
// analyze / stability

/// Largest relative gap between the closed-form indices and the two H2 norms
/// computed from the state-space closed loop.
fn h2_residual(
    spec: &AlgorithmSpec,
    spectrum: &QuadraticSpectrum,
    j: f64,
    jprime: f64,
) -> Result<f64, CmdError> {
    let sys = linsys::build_system(spec, spectrum.d())?;
    let acl = linsys::closed_loop_matrix(&sys, spectrum)?;
    let mut c_j = sys.t.clone();
    for (i, &lam) in spectrum.eigenvalues().iter().enumerate() {
        let scale = (lam / 2.0).sqrt();
        for v in c_j.row_mut(i).iter_mut() {
            *v *= scale;
        }
    }
    let h2_j = linsys::h2_norm_squared(&acl, &sys.b, &c_j)?;
    let h2_jp = linsys::h2_norm_squared(&acl, &sys.b, &sys.t)?;
    let rel = |closed: f64, h2: f64| (closed - h2).abs() / closed.abs().max(f64::MIN_POSITIVE);
    Ok(rel(j, h2_j).max(rel(jprime, h2_jp)))
}

fn cmd_analyze(c: &CommonArgs) -> Result<Outcome, CmdError> {
    let method = need_method(c)?;
    let spec = build_spec(method, c)?;
    let src = resolve_source(c)?;
    let spectrum = full_spectrum(&src)?;
    let (mu, l, d) = (spectrum.mu(), spectrum.l(), spectrum.d());
    let verdict = quad::in_stability_region(spec.alpha, spec.beta, mu, l);
    let rho = match method {
        Method::Gd => quad::gd_rate(spec.alpha, mu, l),
        Method::Ag => quad::ag_rate(spec.alpha, spec.beta, mu, l),
    };
    let mut rep = AnalyzeReport {
        method: method.to_string(),
        alpha: spec.alpha,
        beta: spec.beta,
        d,
        mu,
        l,
        inside: verdict.inside,
        region: verdict.region_label.to_string(),
        margin: verdict.margin,
        rho,
        j: None,
        jprime: None,
        lower_bound: None,
        h2_residual: None,
    };
    let exit = if verdict.inside {
        let (j, jprime) = match method {
            Method::Gd => (
                quad::gd_robustness(spec.alpha, &spectrum)?,
                quad::gd_robustness_iterates(spec.alpha, &spectrum)?,
            ),
            Method::Ag => (
                quad::ag_robustness(spec.alpha, spec.beta, &spectrum)?,
                quad::ag_robustness_iterates(spec.alpha, spec.beta, &spectrum)?,
            ),
        };
        rep.j = Some(j);
        rep.jprime = Some(jprime);
        if spec.beta == 0.0 {
            rep.lower_bound = Some(quad::gd_lower_bound(spec.alpha, &spectrum)?);
        }
        rep.h2_residual = Some(h2_residual(&spec, &spectrum, j, jprime)?);
        0
    } else {
        3
    };
    let text = match fmt_of(c) {
        FormatArg::Table => rep.to_table(),
        FormatArg::Csv => rep.to_csv(),
        FormatArg::Json => report::to_json(&rep),
    };
    Ok(finish(c, text, vec![], exit))
}

fn cmd_stability(c: &CommonArgs) -> Result<Outcome, CmdError> {
    let method = need_method(c)?;
    let spec = build_spec(method, c)?;
    let src = resolve_source(c)?;
    let (mu, l) = scalars(&src);
    let verdict = quad::in_stability_region(spec.alpha, spec.beta, mu, l);
    let rho = match method {
        Method::Gd => quad::gd_rate(spec.alpha, mu, l),
        Method::Ag => quad::ag_rate(spec.alpha, spec.beta, mu, l),
    };
    let rep = StabilityReport {
        method: method.to_string(),
        alpha: spec.alpha,
        beta: spec.beta,
        mu,
        l,
        inside: verdict.inside,
        region: verdict.region_label.to_string(),
        margin: verdict.margin,
        rho,
    };
    let text = match fmt_of(c) {
        FormatArg::Table => rep.to_table(),
        FormatArg::Csv => rep.to_csv(),
        FormatArg::Json => report::to_json(&rep),
    };
    Ok(finish(c, text, vec![], if verdict.inside { 0 } else { 3 }))
}

// ---------------------------------------------------------------------------
// tradeoff

fn cmd_tradeoff(c: &CommonArgs) -> Result<Outcome, CmdError> {
    let method = need_method(c)?;
    if c.alpha.is_some() || c.beta.is_some() {
        return Err(CmdError::usage(
            "tradeoff tunes alpha/beta itself; drop --alpha/--beta",
        ));
    }
    let sweep = resolve_sweep(c, true)?.expect("tau default");
    let src = resolve_source(c)?;
    let (mu, l) = scalars(&src);
    let spectrum;
    let (input, d) = match &src {
        SpecSource::Explicit(s) => {
            spectrum = s.clone();
            (SpectrumInput::Full(&spectrum), s.d())
        }
        SpecSource::Endpoints { mu, l, d } => {
            let d = d.ok_or_else(|| {
                CmdError::usage("--d is required with --mu/--L (the bound scales with it)")
            })?;
            (
                SpectrumInput::Summary {
                    mu: *mu,
                    l: *l,
                    d,
                },
                d,
            )
        }
    };
    let (mode, params) = match &sweep {
        Sweep::Tau(v) => (TradeoffMode::TauPenalized, v),
        Sweep::Eps(v) => (TradeoffMode::EpsConstrained, v),
    };
    // One call per parameter so each Pareto point can be traced back to the
    // sweep value that produced it.
    let mut pairs = Vec::with_capacity(params.len());
    let mut provenance = None;
    for &param in params {
        let curve = tradeoff::pareto_curve(method, &input, mode, &[param], GRID_ALPHA, GRID_BETA)?;
        provenance = Some(curve.provenance);
        let point = curve
            .points
            .into_iter()
            .next()
            .ok_or(CmdError::Lib(Error::EmptyGrid))?;
        pairs.push((param, point));
    }
    let kept = tradeoff::pareto_filter(pairs.iter().map(|(_, p)| p.clone()).collect());
    let points: Vec<CurvePoint> = kept
        .iter()
        .map(|p| {
            let param = pairs
                .iter()
                .find(|(_, q)| q == p)
                .map(|(param, _)| *param)
                .expect("kept points come from pairs");
            CurvePoint::ok(param, p.rho, p.j, p.params.alpha, p.params.beta)
        })
        .collect();
    let rep = CurveReport {
        command: "tradeoff".into(),
        method: method.to_string(),
        provenance: provenance_str(provenance.expect("at least one sweep value")).into(),
        mu,
        l,
        d,
        points,
    };
    let text = match fmt_of(c) {
        FormatArg::Table => rep.to_table(),
        FormatArg::Csv => rep.to_csv(),
        FormatArg::Json => report::to_json(&rep),
    };
    Ok(finish(c, text, vec![], 0))
}

// ---------------------------------------------------------------------------
// certify

fn cmd_certify(c: &CommonArgs) -> Result<Outcome, CmdError> {
    let method = need_method(c)?;
    if c.tau.is_some() || c.tau_grid.is_some() {
        return Err(CmdError::usage(
            "certify sweeps the rate slack; use --eps/--eps-grid, not --tau",
        ));
    }
    let src = resolve_source(c)?;
    let (mu, l) = scalars(&src);
    let d = class_dim(&src);
    let sweep = resolve_sweep(c, false)?;
    match (c.alpha, sweep) {
        (Some(_), Some(_)) => Err(CmdError::usage(
            "give either --alpha or an --eps sweep, not both",
        )),
        (Some(alpha), None) => certify_point(c, method, alpha, mu, l, d),
        (None, Some(Sweep::Eps(grid))) => certify_grid(c, method, &grid, mu, l, d),
        (None, Some(Sweep::Tau(_))) => unreachable!("tau flags rejected above"),
        (None, None) => Err(CmdError::usage("certify needs --alpha or --eps/--eps-grid")),
    }
}

fn certify_point(
    c: &CommonArgs,
    method: Method,
    alpha: f64,
    mu: f64,
    l: f64,
    d: usize,
) -> Result<Outcome, CmdError> {
    let rep = match method {
        Method::Gd => {
            if let Some(b) = c.beta {
                if b != 0.0 {
                    return Err(CmdError::usage(
                        "--beta requires --method ag (gd accepts only --beta 0)",
                    ));
                }
            }
            let rho = cert::gd_min_rho(alpha, mu, l)?;
            let certificate = cert::gd_certificate(alpha, mu, l, d)?;
            CertifyReport {
                method: "gd".into(),
                alpha,
                beta: 0.0,
                mu,
                l,
                d,
                rho,
                bound_r: certificate.bound_r,
                slack_min_eig: certificate.slack_min_eig,
            }
        }
        Method::Ag => {
            let certificate = cert::ag_analytic_certificate(alpha, mu, l, d)?;
            let beta_curve = certificate.spec.beta;
            if let Some(b) = c.beta {
                if (b - beta_curve).abs() > 1e-9 * (1.0 + beta_curve.abs()) {
                    return Err(CmdError::usage(format!(
                        "the AG certificate holds on the momentum curve beta(alpha) = \
                         {beta_curve}; got --beta {b}"
                    )));
                }
            }
            CertifyReport {
                method: "ag".into(),
                alpha,
                beta: beta_curve,
                mu,
                l,
                d,
                rho: certificate.rho,
                bound_r: certificate.bound_r,
                slack_min_eig: certificate.slack_min_eig,
            }
        }
    };
    let text = match fmt_of(c) {
        FormatArg::Table => rep.to_table(),
        FormatArg::Csv => rep.to_csv(),
        FormatArg::Json => report::to_json(&rep),
    };
    Ok(finish(c, text, vec![], 0))
}

/// One certificate per requested rate slack. Slacks whose target rate is not
/// attainable produce an INFEASIBLE row instead of failing the sweep.
fn certify_grid(
    c: &CommonArgs,
    method: Method,
    grid: &[f64],
    mu: f64,
    l: f64,
    d: usize,
) -> Result<Outcome, CmdError> {
    if grid.is_empty() {
        return Err(CmdError::Lib(Error::EmptyGrid));
    }
    let kappa = l / mu;
    let mut points = Vec::with_capacity(grid.len());
    let provenance = match method {
        Method::Gd => {
            let rho_bar = (kappa - 1.0) / (kappa + 1.0);
            for &eps in grid {
                match tradeoff::gd_alpha_for_eps(eps, mu, l) {
                    Ok(alpha) => {
                        let rho = quad::gd_rate(alpha, mu, l);
                        let r = cert::gd_bound_r(alpha, mu, l, d)?;
                        points.push(CurvePoint::ok(eps, rho, r, alpha, 0.0));
                    }
                    Err(Error::EpsOutOfRange { .. }) => {
                        points.push(CurvePoint::infeasible(eps, (1.0 + eps) * rho_bar));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            "explicit-bound"
        }
        Method::Ag => {
            let rho_bar = (1.0 - 1.0 / kappa.sqrt()).max(0.0).sqrt();
            for &eps in grid {
                match cert::ag_sdp_curve(&[eps], mu, l, d, SDP_GRID, SDP_GRID) {
                    Ok(curve) => {
                        let p = curve
                            .points
                            .into_iter()
                            .next()
                            .ok_or(CmdError::Lib(Error::EmptyGrid))?;
                        points.push(CurvePoint::ok(eps, p.rho, p.j, p.params.alpha, p.params.beta));
                    }
                    Err(Error::EpsOutOfRange { .. })
                    | Err(Error::EmptyGrid)
                    | Err(Error::Infeasible { .. }) => {
                        points.push(CurvePoint::infeasible(eps, (1.0 + eps) * rho_bar));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            "sdp-cert"
        }
    };
    let rep = CurveReport {
        command: "certify".into(),
        method: method.to_string(),
        provenance: provenance.into(),
        mu,
        l,
        d,
        points,
    };
    let text = match fmt_of(c) {
        FormatArg::Table => rep.to_table(),
        FormatArg::Csv => rep.to_csv(),
        FormatArg::Json => report::to_json(&rep),
    };
    Ok(finish(c, text, vec![], 0))
}

// ---------------------------------------------------------------------------
// simulate

fn objective_name(kind: ObjectiveArg) -> String {
    match kind {
        ObjectiveArg::Quadratic => "quadratic".into(),
        ObjectiveArg::Laplacian => "laplacian".into(),
    }
}

fn cmd_simulate(s: &SimulateArgs) -> Result<Outcome, CmdError> {
    let c = &s.common;
    let method = need_method(c)?;
    let spec = build_spec(method, c)?;
    let sigma = c
        .sigma
        .ok_or_else(|| CmdError::usage("--sigma is required for simulate"))?;
    let noise = sim::NoiseModel::gaussian(sigma)?;
    let kind = s.extra.objective.unwrap_or(ObjectiveArg::Quadratic);
    let objective = match kind {
        ObjectiveArg::Quadratic => {
            if s.extra.delta.is_some() {
                return Err(CmdError::usage("--delta applies to --objective laplacian"));
            }
            let src = resolve_source(c)?;
            let spectrum = full_spectrum(&src)?;
            let d = spectrum.d();
            sim::Objective::quadratic(spectrum.eigenvalues().to_vec(), DVector::zeros(d))?
        }
        ObjectiveArg::Laplacian => {
            if c.spectrum.is_some() || c.mu.is_some() || c.l.is_some() {
                return Err(CmdError::usage(
                    "--objective laplacian builds its own spectrum; drop --spectrum/--mu/--L",
                ));
            }
            let d = c
                .d
                .ok_or_else(|| CmdError::usage("--d is required for --objective laplacian"))?;
            sim::make_laplacian_objective(d, s.extra.delta.unwrap_or(0.1), c.seed.unwrap_or(0))?
        }
    };
    let seed = c.seed.unwrap_or(0);
    let k_max = c.kmax.unwrap_or(1000);
    let mut files = Vec::new();
    let rep = if sigma > 0.0 {
        if s.extra.x0_offset.is_some() {
            return Err(CmdError::usage(
                "--x0-offset applies to sigma 0 decay runs only",
            ));
        }
        let config = sim::EstimatorConfig::new(c.replicas.unwrap_or(100), k_max, c.burnin, seed)?;
        let (jhat, jhat_stderr) = sim::estimate_j(&spec, &objective, &noise, &config)?;
        let (jprime_hat, jprime_stderr) = sim::estimate_jprime(&spec, &objective, &noise, &config)?;
        if let Some(path) = &s.extra.traj_out {
            // Same seed and replica streams as the estimators, so the rows
            // are the runs behind the reported averages.
            let mut rows = Vec::new();
            for replica in 0..config.replicas {
                let traj = sim::run_noisy_stream(
                    &spec,
                    &objective,
                    objective.x_star(),
                    &noise,
                    config.k_max,
                    config.seed,
                    replica as u64,
                )?;
                for (k, p) in traj.iter().enumerate() {
                    rows.push((k, replica, p.subopt, p.dist2));
                }
            }
            files.push((path.clone(), report::trajectory_csv(&rows)));
        }
        SimulateReport {
            method: method.to_string(),
            alpha: spec.alpha,
            beta: spec.beta,
            objective: objective_name(kind),
            d: objective.d(),
            sigma,
            replicas: config.replicas,
            k_max: config.k_max,
            burn_in: config.burn_in,
            seed,
            jhat: Some(jhat),
            jhat_stderr: Some(jhat_stderr),
            jprime_hat: Some(jprime_hat),
            jprime_stderr: Some(jprime_stderr),
            initial_subopt: None,
            final_subopt: None,
            final_dist2: None,
        }
    } else {
        let offset = s.extra.x0_offset.unwrap_or(1.0);
        let x0 = objective.x_star() + DVector::from_element(objective.d(), offset);
        let traj = sim::run_noisy(&spec, &objective, &x0, &noise, k_max, seed)?;
        if let Some(path) = &s.extra.traj_out {
            let rows: Vec<_> = traj
                .iter()
                .enumerate()
                .map(|(k, p)| (k, 0usize, p.subopt, p.dist2))
                .collect();
            files.push((path.clone(), report::trajectory_csv(&rows)));
        }
        let first = traj.first().expect("trajectory always contains x0");
        let last = traj.last().expect("trajectory always contains x0");
        SimulateReport {
            method: method.to_string(),
            alpha: spec.alpha,
            beta: spec.beta,
            objective: objective_name(kind),
            d: objective.d(),
            sigma,
            replicas: 1,
            k_max,
            burn_in: None,
            seed,
            jhat: None,
            jhat_stderr: None,
            jprime_hat: None,
            jprime_stderr: None,
            initial_subopt: Some(first.subopt),
            final_subopt: Some(last.subopt),
            final_dist2: Some(last.dist2),
        }
    };
    let text = match fmt_of(c) {
        FormatArg::Table => rep.to_table(),
        FormatArg::Csv => rep.to_csv(),
        FormatArg::Json => report::to_json(&rep),
    };
    Ok(finish(c, text, files, 0))
}

// ---------------------------------------------------------------------------
// pareto

fn cmd_pareto(c: &CommonArgs) -> Result<Outcome, CmdError> {
    if c.method.is_some() {
        return Err(CmdError::usage(
            "pareto always compares gd against ag; drop --method",
        ));
    }
    if c.eps.is_some() || c.eps_grid.is_some() {
        return Err(CmdError::usage(
            "pareto sweeps the tau penalty; --eps does not apply",
        ));
    }
    if c.alpha.is_some() || c.beta.is_some() {
        return Err(CmdError::usage(
            "pareto tunes alpha/beta itself; drop --alpha/--beta",
        ));
    }
    let src = resolve_source(c)?;
    let spectrum = full_spectrum(&src)?;
    let (mu, l, d) = (spectrum.mu(), spectrum.l(), spectrum.d());
    let taus = match resolve_sweep(c, true)? {
        Some(Sweep::Tau(v)) => v,
        _ => unreachable!("eps flags rejected above"),
    };
    let mut pairs = Vec::with_capacity(taus.len());
    for &tau in &taus {
        pairs.push((tau, tradeoff::gd_optimal_stepsize_tau(tau, &spectrum)?));
    }
    let kept = tradeoff::pareto_filter(pairs.iter().map(|(_, p)| p.clone()).collect());
    let mut gd_rows = Vec::with_capacity(kept.len());
    let mut ag_rows = Vec::with_capacity(kept.len());
    let mut max_gap = f64::NEG_INFINITY;
    for p in &kept {
        let tau = pairs
            .iter()
            .find(|(_, q)| q == p)
            .map(|(tau, _)| *tau)
            .expect("kept points come from pairs");
        gd_rows.push(CurvePoint::ok(tau, p.rho, p.j, p.params.alpha, p.params.beta));
        // The GD stepsize at beta = 0 seeds the AG search, so AG can never
        // come out worse than GD at the same rate cap.
        let ag = tradeoff::ag_min_j_at_rate(
            p.rho,
            &spectrum,
            GRID_ALPHA,
            GRID_BETA,
            &[(p.params.alpha, 0.0)],
        )?;
        max_gap = max_gap.max(ag.j - p.j);
        ag_rows.push(CurvePoint::ok(p.rho, ag.rho, ag.j, ag.params.alpha, ag.params.beta));
    }
    let rep = ParetoReport {
        mu,
        l,
        d,
        gd: gd_rows,
        ag: ag_rows,
        ag_dominates: max_gap <= 1e-9,
        max_j_gap: if max_gap == f64::NEG_INFINITY {
            0.0
        } else {
            max_gap
        },
    };
    let text = match fmt_of(c) {
        FormatArg::Table => rep.to_table(),
        FormatArg::Csv => rep.to_csv(),
        FormatArg::Json => report::to_json(&rep),
    };
    Ok(finish(c, text, vec![], 0))
}

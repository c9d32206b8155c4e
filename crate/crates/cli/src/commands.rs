use std::f64::consts::LN_2;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use impulsive_core::config::{reference, Scenario, ScenarioConfig};
use impulsive_core::io::{fmt_num, read_trajectory_csv, write_matrix_block, write_norms_csv, write_trajectory_csv};
use impulsive_core::linalg::{mat_norm, vec_norm};
use impulsive_core::{
    certify_from_k, check_dominance, evolution_dominance, evolution_from_g, fundamental_dominance,
    hypothesis_bounds, probe_k_estimate, scalar_probe, solve_ivp, CertificateKind,
    DominanceReport, Error, FundamentalSolution, NonImpulsiveEvolution, Result,
    StabilityCertificate, Verdict,
};
use serde_json::{json, Value};

use crate::{CertifyArgs, Cli, Command, EvolutionArgs, Failure, OutputArgs, ProbeArgs};

pub fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    if !(cli.h_max > 0.0 && cli.h_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("--h-max must be positive, got {}", cli.h_max)).into());
    }
    match &cli.command {
        Command::Simulate(args) => simulate(cli, args)?,
        Command::Fundamental(args) => fundamental(cli, args)?,
        Command::Evolution(args) => evolution(cli, args)?,
        Command::Certify(args) => return certify(cli, args),
        Command::Probe(args) => probe(cli, args)?,
        Command::Examples => return examples(cli),
    }
    Ok(())
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)?.build_with_horizon(cli.horizon)
}

/// Explicit path, else `<out_dir>/<default_name>`, else stdout.
fn sink(cli: &Cli, explicit: Option<&Path>, default_name: &str) -> Result<Box<dyn Write>> {
    let path: Option<PathBuf> = match (explicit, &cli.out_dir) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(dir)) => {
            fs::create_dir_all(dir)?;
            Some(dir.join(default_name))
        }
        (None, None) => None,
    };
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(cli: &Cli, args: &OutputArgs) -> Result<()> {
    let sc = load(cli, &args.config)?;
    let tr = solve_ivp(&sc.system, &sc.forcing, &sc.x0, cli.h_max)?;
    let mut out = sink(cli, args.out.as_deref(), "trajectory.csv")?;
    write_trajectory_csv(&tr, &mut out)?;
    out.flush()?;
    Ok(())
}

fn fundamental(cli: &Cli, args: &OutputArgs) -> Result<()> {
    let sc = load(cli, &args.config)?;
    let f = FundamentalSolution::build(&sc.system, cli.h_max)?;
    let mut out = sink(cli, args.out.as_deref(), "fundamental.csv")?;
    write_norms_csv(f.norm_samples().iter().map(|s| (s.t, s.norm, s.pre_jump)), &mut out)?;
    out.flush()?;
    Ok(())
}

fn evolution(cli: &Cli, args: &EvolutionArgs) -> Result<()> {
    let sc = load(cli, &args.config)?;
    let sys = &sc.system;
    let f = FundamentalSolution::build(sys, cli.h_max)?;
    let direct = f.evolution(args.t, args.s)?;
    let g = NonImpulsiveEvolution::new(sys.coefficients().clone(), cli.h_max);
    let (composed, branch) = evolution_from_g(&g, sys.jumps(), sys.schedule(), args.t, args.s)?;
    let gap = mat_norm(&(&direct - &composed));

    let mut out = BufWriter::new(io::stdout().lock());
    let head = |c: &str| format!("# t={},s={},branch={branch},construction={c}", args.t, args.s);
    write_matrix_block(&head("fundamental"), &direct, &mut out)?;
    write_matrix_block(&head("jumps-and-flow"), &composed, &mut out)?;
    writeln!(out, "# disagreement={}", fmt_num(gap))?;
    out.flush()?;
    Ok(())
}

fn report_json(r: &DominanceReport) -> Value {
    json!({
        "max_ratio": r.max_ratio,
        "worst_t": r.worst_t,
        "worst_s": r.worst_s,
        "status": if r.pass { "PASS" } else { "FAIL" },
    })
}

fn dominance_for(
    cert: &StabilityCertificate,
    f: &FundamentalSolution,
    spacing: f64,
) -> Result<DominanceReport> {
    match cert.kind {
        CertificateKind::Fundamental => Ok(fundamental_dominance(cert, f)),
        CertificateKind::Evolution => evolution_dominance(cert, f, spacing),
    }
}

fn certify(cli: &Cli, args: &CertifyArgs) -> std::result::Result<(), Failure> {
    let sc = load(cli, &args.config)?;
    let sys = &sc.system;
    let hb = hypothesis_bounds(sys)?;
    let spacing = args.spacing.unwrap_or(0.25 * hb.sigma);
    let f = FundamentalSolution::build(sys, cli.h_max)?;

    let mut record = serde_json::Map::new();
    let mut certs: Vec<(&str, StabilityCertificate)> = Vec::new();

    if let Some(path) = &args.check {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("certificate: {e}")))?;
        let mut found = false;
        for key in ["fundamental", "evolution"] {
            if let Some(v) = value.get(key) {
                certs.push((key, StabilityCertificate::from_json(&v.to_string())?));
                found = true;
            }
        }
        if !found {
            certs.push(("certificate", StabilityCertificate::from_json(&text)?));
        }
    } else {
        let (k, k_record) = match args.k {
            Some(k) => (k, json!({ "value": k, "source": "supplied" })),
            None => {
                let est = probe_k_estimate(sys, args.trials, cli.seed)?;
                if !est.k_hat.is_finite() {
                    return Err(Error::HypothesisViolated(
                        "probe response overflowed; no finite uniform bound k on this horizon".into(),
                    )
                    .into());
                }
                if est.horizon_sensitive {
                    eprintln!(
                        "warning: k estimate still grows with the horizon (k = {} at the half horizon, {} at the end)",
                        est.k_half_horizon, est.k_hat
                    );
                }
                (
                    est.k_hat,
                    json!({
                        "value": est.k_hat,
                        "source": "probe",
                        "trials": est.trials,
                        "seed": est.seed,
                        "horizon_sensitive": est.horizon_sensitive,
                    }),
                )
            }
        };
        record.insert("k".into(), k_record);
        record.insert(
            "hypotheses".into(),
            json!({ "rho": hb.rho, "sigma": hb.sigma, "b": hb.b, "M": hb.m, "q": hb.q }),
        );
        let (fund, evo) = certify_from_k(&f, k)?;
        certs.push(("fundamental", fund));
        certs.push(("evolution", evo));
    }

    let mut pass = true;
    let mut dominance = serde_json::Map::new();
    for (key, cert) in &certs {
        let r = dominance_for(cert, &f, spacing)?;
        pass &= r.pass;
        dominance.insert((*key).into(), report_json(&r));
        record.insert((*key).into(), serde_json::to_value(cert).expect("certificate serialises"));
    }

    if let Some(path) = &args.trajectory {
        let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let tr = read_trajectory_csv(BufReader::new(file))?;
        let fund = certs
            .iter()
            .find(|(_, c)| c.kind == CertificateKind::Fundamental)
            .map(|(_, c)| c)
            .ok_or_else(|| Error::InvalidArgument("trajectory check needs a fundamental certificate".into()))?;
        let x0 = tr.samples.first().map_or(0.0, |(_, x)| vec_norm(x));
        let r = check_dominance(fund, &tr.norms_with_pre_jump(), x0.max(f64::MIN_POSITIVE));
        pass &= r.pass;
        dominance.insert("trajectory".into(), report_json(&r));
    }

    record.insert("dominance".into(), Value::Object(dominance));
    record.insert("status".into(), json!(if pass { "PASS" } else { "FAIL" }));
    let mut out = sink(cli, args.out.as_deref(), "certificate.json")?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(record))
        .map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out).map_err(Error::from)?;
    out.flush().map_err(Error::from)?;

    if pass {
        Ok(())
    } else {
        Err(Failure::Dominance("certificate dominance check FAIL".into()))
    }
}

fn probe(cli: &Cli, args: &ProbeArgs) -> Result<()> {
    let sc = load(cli, &args.config)?;
    let sys = &sc.system;
    let k = probe_k_estimate(sys, args.trials, cli.seed)?;
    let mut record = json!({
        "verdict": null,
        "Q_hat": null,
        "growth_ratio": null,
        "horizon": sys.horizon(),
        "seed": cli.seed,
        "k_hat": k.k_hat,
        "k_half_horizon": k.k_half_horizon,
        "trials": k.trials,
        "horizon_sensitive": k.horizon_sensitive,
    });
    if sys.dimension() == 1 {
        let pv = scalar_probe(sys, cli.h_max)?;
        record["verdict"] = json!(pv.verdict);
        record["Q_hat"] = json!(pv.q_hat);
        record["growth_ratio"] = json!(pv.growth_ratio);
        record["overflow_time"] = json!(pv.overflow_time);
        if let (Some(path), Some(tr)) = (&args.trajectory_out, &pv.trajectory) {
            let mut out = sink(cli, Some(path), "probe.csv")?;
            write_trajectory_csv(tr, &mut out)?;
            out.flush()?;
        }
    } else if args.trajectory_out.is_some() {
        eprintln!("warning: the sign probe is scalar only; no trajectory written");
    }
    let mut out = BufWriter::new(io::stdout().lock());
    serde_json::to_writer_pretty(&mut out, &record).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn examples(cli: &Cli) -> std::result::Result<(), Failure> {
    let mut out = BufWriter::new(io::stdout().lock());
    let mut ok = true;
    let horizon = cli.horizon.unwrap_or(10.0);

    // x' = 0, x(i) = 0.5 x(i - 0): x(t) = 2^-floor(t) <= 2 exp(-t ln 2).
    let sc = reference::halving(horizon).build()?;
    let tr = solve_ivp(&sc.system, &sc.forcing, &sc.x0, cli.h_max)?;
    let ratio = tr
        .norms_with_pre_jump()
        .iter()
        .map(|&(t, v)| v * (t * LN_2).exp() / 2.0)
        .fold(0.0, f64::max);
    let holds = ratio <= 1.0 + 1e-9;
    ok &= holds;
    let probe_sys = reference::halving(40.0).build()?.system;
    let pv = scalar_probe(&probe_sys, cli.h_max)?;
    let nu = (pv.q_hat / (pv.q_hat - 1.0)).ln();
    let out_err = |e: io::Error| Failure::Core(e.into());
    writeln!(out, "example 1: x' = 0, x(i) = 0.5 x(i-0), x(0) = 1 on [0, {horizon}]").map_err(out_err)?;
    writeln!(out, "  observed max x(t) 2^t / 2 = {ratio:.9}").map_err(out_err)?;
    writeln!(out, "  bound x(t) <= 2 exp(-t ln 2): {}", if holds { "holds" } else { "VIOLATED" }).map_err(out_err)?;
    writeln!(out, "  sign probe on [0, 40]: {:?}, Q_hat = {:.9}, nu from k = {nu:.9} (ln 2 = {LN_2:.9})", pv.verdict, pv.q_hat)
        .map_err(out_err)?;

    // x' + x = 0, x(i) = e x(i - 0): x(i) = x(0), no decay.
    let sc = reference::decay_with_e_jumps(horizon).build()?;
    let tr = solve_ivp(&sc.system, &sc.forcing, &sc.x0, cli.h_max)?;
    let worst = tr
        .jumps
        .iter()
        .map(|j| (j.post[0] - 1.0).abs())
        .fold(0.0, f64::max);
    let holds = worst < 1e-6;
    ok &= holds;
    let probe_sys = reference::decay_with_e_jumps(40.0).build()?.system;
    let pv = scalar_probe(&probe_sys, cli.h_max)?;
    let growth = pv.verdict == Verdict::GrowthDetected;
    ok &= growth;
    writeln!(out, "example 2: x' + x = 0, x(i) = e x(i-0), x(0) = 1 on [0, {horizon}]").map_err(out_err)?;
    writeln!(out, "  observed max |x(i) - x(0)| = {worst:.3e}").map_err(out_err)?;
    writeln!(out, "  x(i) = x(0) (not exponentially stable): {}", if holds { "holds" } else { "VIOLATED" })
        .map_err(out_err)?;
    writeln!(out, "  sign probe on [0, 40]: {:?}, Q_hat = {:.6}", pv.verdict, pv.q_hat).map_err(out_err)?;
    out.flush().map_err(out_err)?;

    if ok {
        Ok(())
    } else {
        Err(Failure::Dominance("reference example disagrees with its bound".into()))
    }
}

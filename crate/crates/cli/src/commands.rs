use std::path::Path;

use omegasym::beta;
use omegasym::cubes::{self, build_lattice};
use omegasym::flatness;
use omegasym::io::{load_measure, save_measure};
use omegasym::kernel::{check_dot_lemmas, derivative_check, DerivativeCheck, LemmaReport};
use omegasym::symmetry::{self, DefectConfig};
use omegasym::synth::{GeneratorKind, GeneratorSpec};
use omegasym::{DiscreteMeasure, Execution, OmegaMap};
use serde::Serialize;

use crate::report::{write_json, write_table, Envelope, Failure};
use crate::{
    BetaCubesArgs, BetaProfileArgs, CertifyArgs, ClassifyArgs, Common, DefectArgs, GenerateArgs, KernelValidateArgs,
    PvArgs,
};

const EXEC: Execution = Execution::Parallel;

pub fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| format!("unknown generator `{s}`"))
}

/// A kernel file, `identity`, or `sine:AMPLITUDE`.
fn load_kernel(spec: &str) -> Result<OmegaMap, Failure> {
    if spec == "identity" {
        return Ok(OmegaMap::identity());
    }
    if let Some(amp) = spec.strip_prefix("sine:") {
        let amp: f64 = amp
            .parse()
            .map_err(|_| Failure::Validation(format!("`{amp}` is not a number")))?;
        return Ok(OmegaMap::sine(amp)?);
    }
    Ok(OmegaMap::load(Path::new(spec))?)
}

fn load(path: &Path) -> Result<DiscreteMeasure, Failure> {
    load_measure(path).map_err(|e| match Failure::from(e) {
        Failure::Io(m) => Failure::Io(format!("{}: {m}", path.display())),
        Failure::Validation(m) => Failure::Validation(format!("{}: {m}", path.display())),
    })
}

fn pitch(mu: &DiscreteMeasure) -> Option<f64> {
    Some(mu.spacing().unwrap_or_else(|| mu.pitch()))
}

pub fn generate(c: &Common, args: &GenerateArgs) -> Result<(), Failure> {
    let spec = GeneratorSpec {
        kind: args.kind,
        h: args.h,
        extent: args.extent,
        lines: args.lines,
        gap: args.gap,
        amplitude: args.amplitude,
        frequency: args.frequency,
        sigma: args.sigma,
        angle: args.angle,
        seed: c.seed,
    };
    let mu = spec.generate()?;
    match &args.out {
        Some(p) => {
            save_measure(&mu, p)?;
            eprintln!("{} points, total mass {}", mu.len(), mu.total_mass());
        }
        None => omegasym::io::write_measure(&mu, std::io::stdout().lock())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct KernelReport {
    coeffs: Vec<omegasym::kernel::Harmonic>,
    delta: f64,
    admissible: bool,
    min_derivative: f64,
    max_derivative: f64,
    derivatives: DerivativeCheck,
    /// Only run for admissible kernels.
    lemmas: Option<LemmaReport>,
}

pub fn kernel_validate(c: &Common, args: &KernelValidateArgs) -> Result<(), Failure> {
    let om = load_kernel(&args.kernel)?;
    let admissible = om.is_admissible();
    let lemmas = if admissible {
        Some(check_dot_lemmas(&om, args.grid, EXEC)?)
    } else {
        None
    };
    let rep = KernelReport {
        coeffs: om.coeffs().to_vec(),
        delta: om.delta(),
        admissible,
        min_derivative: om.min_derivative(),
        max_derivative: om.max_derivative(),
        derivatives: derivative_check(&om, args.samples, c.seed)?,
        lemmas,
    };
    let violations = rep.lemmas.as_ref().map_or(0, |l| l.violations());
    write_json(args.out.as_deref(), &Envelope::new(c, None, rep))?;
    if !admissible {
        return Err(Failure::Validation(format!(
            "kernel is not admissible (delta {} > {})",
            om.delta(),
            omegasym::kernel::ADMISSIBLE_DELTA
        )));
    }
    if violations > 0 {
        return Err(Failure::Validation(format!("{violations} dot-product lemma violations")));
    }
    Ok(())
}

#[derive(Serialize)]
struct ProfileSummary {
    x0: omegasym::Point2,
    ell: f64,
    n: u32,
    total: f64,
    regime: &'static str,
}

pub fn beta_profile(c: &Common, args: &BetaProfileArgs) -> Result<(), Failure> {
    let mu = load(&args.measure)?;
    let profile = beta::multiscale_sum(&mu, args.x, args.ell, args.n)?;
    let regime = if profile.is_small(c.tau) {
        flatness::Regime::SmallBeta
    } else {
        flatness::Regime::LargeBeta
    };
    let summary = ProfileSummary {
        x0: args.x,
        ell: args.ell,
        n: args.n,
        total: profile.total(),
        regime: regime.name(),
    };
    write_table(args.out.as_deref(), &Envelope::new(c, pitch(&mu), summary), |w| profile.write_csv(w))
}

#[derive(Serialize)]
struct CubesSummary {
    cubes: usize,
    j_min: i32,
    j_max: i32,
    c0: f64,
    c0_diam: f64,
    c0_mass: f64,
}

pub fn beta_cubes(c: &Common, args: &BetaCubesArgs) -> Result<(), Failure> {
    let mu = load(&args.measure)?;
    let lat = build_lattice(&mu, args.jmin, args.jmax)?;
    let betas = beta::beta_cubes(&mu, &lat, EXEC);
    let etas = omegasym::exec::map(EXEC, lat.cubes(), |q| cubes::balanced_points(&mu, q).ok().map(|b| b.eta));
    let summary = CubesSummary {
        cubes: lat.len(),
        j_min: lat.j_min,
        j_max: lat.j_max,
        c0: lat.c0(),
        c0_diam: lat.c0_diam,
        c0_mass: lat.c0_mass,
    };
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    write_table(args.out.as_deref(), &Envelope::new(c, pitch(&mu), summary), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "cube_id", "level", "side", "mass", "diam", "center_x", "center_y", "parent", "members", "beta", "eta",
        ])?;
        for ((q, b), eta) in lat.cubes().iter().zip(&betas).zip(&etas) {
            out.write_record([
                q.id.to_string(),
                q.level.to_string(),
                q.side.to_string(),
                q.mass.to_string(),
                q.diam.to_string(),
                q.center.x.to_string(),
                q.center.y.to_string(),
                q.parent.map_or_else(String::new, |p| p.to_string()),
                q.len().to_string(),
                opt(b.as_ref().map(|b| b.beta)),
                opt(*eta),
            ])?;
        }
        out.flush()?;
        Ok(())
    })?;
    if let Some(tree) = &args.tree {
        std::fs::write(tree, lat.tree_json())?;
    }
    Ok(())
}

pub fn symmetry_defect(c: &Common, args: &DefectArgs) -> Result<(), Failure> {
    let mu = load(&args.measure)?;
    let om = load_kernel(&args.kernel)?;
    let mut config = DefectConfig::new(args.centers, args.rmin, args.rmax, args.scales);
    config.center_region = args.region;
    config.riesz_outer = args.riesz_outer;
    let rep = symmetry::defect_report(&mu, &om, &config, args.functional, EXEC)?;
    if let Some(path) = &args.csv {
        let file = std::fs::File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        rep.write_csv(std::io::BufWriter::new(file))?;
    }
    write_json(args.out.as_deref(), &Envelope::new(c, pitch(&mu), rep))
}

#[derive(Serialize)]
struct PvSummary {
    x: omegasym::Point2,
    outer: f64,
    max_step: f64,
    last: omegasym::Point2,
}

pub fn symmetry_pv(c: &Common, args: &PvArgs) -> Result<(), Failure> {
    let mu = load(&args.measure)?;
    let om = load_kernel(&args.kernel)?;
    let eps: Vec<f64> = (0..args.levels).map(|k| args.eps * 0.5f64.powi(k as i32)).collect();
    let pv = symmetry::pv_profile(&mu, &om, args.x, &eps, args.outer)?;
    let summary = PvSummary {
        x: args.x,
        outer: pv.outer,
        max_step: pv.max_step,
        last: pv.values.last().copied().unwrap_or(omegasym::Point2::ORIGIN),
    };
    write_table(args.out.as_deref(), &Envelope::new(c, pitch(&mu), summary), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["eps", "value_x", "value_y", "norm"])?;
        for (e, v) in pv.epsilons.iter().zip(&pv.values) {
            out.write_record([e.to_string(), v.x.to_string(), v.y.to_string(), v.norm().to_string()])?;
        }
        out.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct CertifySummary {
    top_cube: usize,
    top_level: i32,
    rows: usize,
    max_ratio: f64,
    carleson_lhs: f64,
    carleson_rhs: f64,
    symmetry_defect: f64,
    defect_tolerance: f64,
    claimed: bool,
}

pub fn flatness_certify(c: &Common, args: &CertifyArgs) -> Result<(), Failure> {
    let mu = load(&args.measure)?;
    let om = load_kernel(&args.kernel)?;
    let lat = build_lattice(&mu, args.jmin, args.jmax)?;
    let level = args.level.unwrap_or(args.jmin);
    if level < lat.j_min || level > lat.j_max {
        return Err(Failure::Validation(format!(
            "level {level} is outside the lattice [{}, {}]",
            lat.j_min, lat.j_max
        )));
    }
    let anchor = match args.at {
        Some(p) => (0..mu.len())
            .min_by(|&i, &j| mu.point(i).dist(p).total_cmp(&mu.point(j).dist(p)))
            .unwrap_or(0),
        None => mu.len() / 2,
    };
    let s = lat.owner(level, anchor).expect("every point has an owner at every level");
    let cert = flatness::certify(&mu, &om, &lat, s, c.a, c.tau, c.gamma, EXEC)?;
    let summary = CertifySummary {
        top_cube: s,
        top_level: level,
        rows: cert.rows.len(),
        max_ratio: cert.max_ratio(),
        carleson_lhs: cert.carleson_lhs,
        carleson_rhs: cert.carleson_rhs,
        symmetry_defect: cert.symmetry_defect,
        defect_tolerance: cert.defect_tolerance,
        claimed: cert.claimed,
    };
    if !cert.claimed {
        eprintln!(
            "symmetry defect {} exceeds {}: rows are informational",
            cert.symmetry_defect, cert.defect_tolerance
        );
    }
    write_table(args.out.as_deref(), &Envelope::new(c, pitch(&mu), summary), |w| cert.write_csv(w))
}

pub fn flatness_classify(c: &Common, args: &ClassifyArgs) -> Result<(), Failure> {
    let mu = load(&args.measure)?;
    let verdict = flatness::classify_flat(&mu, c.tol)?;
    write_json(args.out.as_deref(), &Envelope::new(c, pitch(&mu), verdict))
}

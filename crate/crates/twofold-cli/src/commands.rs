//! The four pipeline commands. Each validates what it needs from the shared
//! config, fans parameter sweeps out over the thread pool, and writes all
//! files from the collecting thread in input order so reruns are
//! byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use twofold_core::{
    canard_mu2_over_r2, continue_branch, cycle_discriminant, focus_node_mu2, hopf_mu2_over_r2,
    integrate_filippov, integrate_smooth, locate_explosion, locate_fold, lyapunov_a2,
    pseudo_equilibrium, sliding_regions, y_hat_c, y_hat_star0, Branch, CanardKind, Class,
    ExplosionBracket, Fold, LimitCycleSupport, Mode, OdeOptions, Phi, PseudoKind, RegionKind,
    RegularizedField, SlidingBranch, Tangency, Trajectory,
};

use crate::config::{slug, ConfigError, RunConfig};
use crate::output::{render_plot, Annotation, Csv, Series};

/// Failure classes mapped to exit codes by main: configuration and I/O
/// problems exit 2, numerical ones exit 3.
pub enum Failure {
    Config(String),
    Numeric(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn numeric(e: twofold_core::Error) -> Failure {
    Failure::Numeric(e.to_string())
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Config(format!("cannot write {}: {e}", path.display()))
}

fn tangency_text(t: Tangency) -> &'static str {
    match t {
        Tangency::Visible => "visible",
        Tangency::Invisible => "invisible",
    }
}

fn kind_text(k: RegionKind) -> &'static str {
    match k {
        RegionKind::StableSliding => "stable sliding",
        RegionKind::UnstableSliding => "unstable sliding",
        RegionKind::CrossingUp => "crossing up",
        RegionKind::CrossingDown => "crossing down",
    }
}

pub fn classify(cfg: &RunConfig, out_dir: &Path) -> Result<(), Failure> {
    let m = &cfg.model;
    let cls = m.classify().map_err(numeric)?;
    let mut rep = String::new();
    let _ = writeln!(rep, "model {}", cfg.model_path.display());
    let _ = writeln!(rep, "class {}  (Omega = {})", cls.class, cls.omega);
    let _ = writeln!(
        rep,
        "tangencies: upper {}, lower {}",
        tangency_text(cls.upper_tangency),
        tangency_text(cls.lower_tangency)
    );
    let _ = writeln!(
        rep,
        "singular canard: {}",
        match cls.singular_canard {
            Some(CanardKind::Vrai) => "vrai",
            Some(CanardKind::Faux) => "faux",
            None => "none",
        }
    );
    let _ = writeln!(
        rep,
        "limit cycles: {}",
        match cls.limit_cycles {
            LimitCycleSupport::None => "none",
            LimitCycleSupport::Pws => "piecewise-smooth crossing cycle",
            LimitCycleSupport::RegularizedOnly => "regularized system only",
        }
    );
    if matches!(cls.class, Class::II2 | Class::VI3) {
        let disc = cycle_discriminant(m).map_err(numeric)?;
        let _ = writeln!(
            rep,
            "cycle discriminant: {disc} (O(1) cycles {})",
            if disc < 0.0 { "attracting" } else { "repelling" }
        );
    }

    let mus = if cfg.has_mu() { cfg.mu_values()? } else { vec![0.1] };
    for mu in mus {
        let _ = writeln!(rep, "mu = {mu}:");
        let regions = sliding_regions(m, mu, cfg.window).map_err(numeric)?;
        for s in &regions.segments {
            let _ = writeln!(rep, "  [{}, {}]  {}", s.x_left, s.x_right, kind_text(s.kind));
        }
        match pseudo_equilibrium(m, mu) {
            Ok(pe) => {
                let kind = match pe.kind {
                    PseudoKind::Saddle => "saddle".to_string(),
                    PseudoKind::Node { attracting } => {
                        format!("{} node", if attracting { "attracting" } else { "repelling" })
                    }
                };
                let branch = match pe.branch {
                    SlidingBranch::Stable => "stable",
                    SlidingBranch::Unstable => "unstable",
                };
                let _ = writeln!(
                    rep,
                    "  pseudo-equilibrium at x = {} ({kind}, {branch} sliding branch)",
                    pe.x
                );
            }
            Err(e) => {
                let _ = writeln!(rep, "  no pseudo-equilibrium: {e}");
            }
        }
    }

    print!("{rep}");
    let path = out_dir.join("classify.txt");
    std::fs::write(&path, &rep).map_err(io(&path))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn analyze(cfg: &RunConfig, out_dir: &Path) -> Result<(), Failure> {
    if cfg.phis.is_empty() {
        return Err(Failure::Config("analyze needs at least one `phi`".into()));
    }
    let m = &cfg.model;
    let disc = cycle_discriminant(m).ok();
    if let Some(d) = disc {
        println!("cycle discriminant: {d}");
    }

    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let show = |v: Option<f64>| v.map(|x| format!("{x:.10}")).unwrap_or_else(|| "-".into());

    let mut csv = Csv::new(cfg.hash);
    csv.row(&[
        "phi",
        "mu2_hopf_over_r2",
        "mu2_hopf",
        "a2",
        "mu2_canard_over_r2",
        "mu2_canard",
        "mu2_focus_node",
        "y_balance",
        "y_canard",
        "phi_slope_balance",
        "phi_slope_canard",
    ]);
    println!(
        "{:<16} {:>16} {:>12} {:>16} {:>16} {:>12} {:>12}",
        "phi", "mu2_hopf/r2", "a2", "mu2_canard/r2", "mu2_focus_node", "y_balance", "y_canard"
    );
    let mut warnings = Vec::new();
    for (label, phi) in &cfg.phis {
        let hopf = hopf_mu2_over_r2(m, phi).ok();
        let a2 = lyapunov_a2(m, phi).ok();
        let canard = canard_mu2_over_r2(m, phi).ok();
        let focus = focus_node_mu2(m, phi).ok();
        let yb = y_hat_star0(m, phi).ok();
        let yc = y_hat_c(m, phi).ok();
        let slope_b = yb.map(|y| phi.slope(y));
        let slope_c = yc.map(|y| phi.slope(y));
        csv.row(&[
            label.clone(),
            cell(hopf),
            cell(hopf.zip(cfg.r2).map(|(h, r)| h * r)),
            cell(a2),
            cell(canard),
            cell(canard.zip(cfg.r2).map(|(c, r)| c * r)),
            cell(focus),
            cell(yb),
            cell(yc),
            cell(slope_b),
            cell(slope_c),
        ]);
        println!(
            "{label:<16} {:>16} {:>12} {:>16} {:>16} {:>12} {:>12}",
            show(hopf),
            show(a2),
            show(canard),
            show(focus),
            show(yb),
            show(yc)
        );
        if let (Some(a), Some(d)) = (a2, disc) {
            if a * d < 0.0 {
                warnings.push(format!(
                    "warning: phi = {label}: a2 = {a} and cycle discriminant = {d} have opposite \
                     signs; a saddle-node of limit cycles sits between the small and O(1) families"
                ));
            }
        }
    }
    for w in &warnings {
        println!("{w}");
        eprintln!("{w}");
    }
    let path = out_dir.join("analyze.csv");
    csv.write_to(&path).map_err(io(&path))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Mode text for a sample time, walking the span list with a cursor.
struct ModeLookup<'a> {
    traj: &'a Trajectory,
    cursor: usize,
}

impl<'a> ModeLookup<'a> {
    fn new(traj: &'a Trajectory) -> Self {
        ModeLookup { traj, cursor: 0 }
    }

    fn at(&mut self, t: f64) -> &'static str {
        let spans = &self.traj.modes;
        while self.cursor + 1 < spans.len() && t > spans[self.cursor].t_end {
            self.cursor += 1;
        }
        match spans.get(self.cursor).map(|s| s.mode) {
            Some(Mode::UpperHalf) => "upper",
            Some(Mode::LowerHalf) => "lower",
            Some(Mode::Sliding) => "sliding",
            None => "",
        }
    }
}

pub fn simulate(cfg: &RunConfig, out_dir: &Path) -> Result<(), Failure> {
    let r2 = cfg.need_r2()?;
    let x0 = cfg.x0.ok_or_else(|| Failure::Config("simulate needs `x0`".into()))?;
    let y0 = cfg.y0.ok_or_else(|| Failure::Config("simulate needs `y0`".into()))?;
    let t1 = cfg.t1.ok_or_else(|| Failure::Config("simulate needs `t1`".into()))?;
    if t1 <= cfg.t0 {
        return Err(Failure::Config(format!("time span [{}, {t1}] is empty", cfg.t0)));
    }
    let smooth = r2 > 0.0;
    let phi = if smooth {
        match cfg.phis.as_slice() {
            [one] => Some(one),
            [] => return Err(Failure::Config("simulate with r2 > 0 needs a `phi`".into())),
            _ => return Err(Failure::Config("simulate takes a single `phi`".into())),
        }
    } else {
        None
    };
    let mus = cfg.mu_values()?;
    let opts = OdeOptions {
        rtol: cfg.rtol.unwrap_or(1e-10),
        atol: cfg.atol.unwrap_or(1e-12),
        sample_dt: Some(cfg.sample_dt.unwrap_or((t1 - cfg.t0) / 5000.0)),
        ..OdeOptions::default()
    };

    let runs: Vec<(usize, f64, Trajectory)> = mus
        .par_iter()
        .enumerate()
        .map(|(idx, &mu)| {
            let traj = if let Some((_, phi)) = phi {
                let field = RegularizedField { model: &cfg.model, phi, eps: r2 * r2, mu };
                integrate_smooth(&|_t, s: &[f64; 2]| field.eval(s[0], s[1]), cfg.t0, t1, [x0, y0], &opts)
            } else {
                integrate_filippov(&cfg.model, mu, cfg.t0, t1, [x0, y0], &opts)
            }
            .map_err(numeric)?;
            Ok((idx, mu, traj))
        })
        .collect::<Result<_, Failure>>()?;

    for (idx, mu, traj) in &runs {
        let path = out_dir.join(format!("simulate_{idx:03}.csv"));
        let mut csv = Csv::new(cfg.hash);
        csv.row(&["t", "x", "y", "mode", "mu"]);
        let mut modes = ModeLookup::new(traj);
        let mu_text = format!("{mu}");
        for k in 0..traj.t.len() {
            let mode = if phi.is_some() { "smooth" } else { modes.at(traj.t[k]) };
            csv.row(&[
                format!("{}", traj.t[k]),
                format!("{}", traj.x[k]),
                format!("{}", traj.y[k]),
                mode.to_string(),
                mu_text.clone(),
            ]);
        }
        csv.write_to(&path).map_err(io(&path))?;
        let last = traj.t.len() - 1;
        println!(
            "mu = {mu}: {} samples, {} mode spans, final (x, y) = ({}, {}), wrote {}",
            traj.t.len(),
            traj.modes.len(),
            traj.x[last],
            traj.y[last],
            path.display()
        );
        for d in &traj.diagnostics {
            println!("  note: {d}");
        }

        if cfg.svg {
            let series = vec![Series {
                label: format!("mu = {mu}"),
                points: traj.x.iter().copied().zip(traj.y.iter().copied()).collect(),
            }];
            let mut notes = vec![Annotation::HLine { y: 0.0 }];
            if smooth {
                notes.push(Annotation::HLine { y: r2 * r2 });
                notes.push(Annotation::HLine { y: -r2 * r2 });
            }
            let svg = render_plot(
                &format!("trajectory, mu = {mu}"),
                "x",
                "y",
                &series,
                &notes,
            );
            let path = out_dir.join(format!("simulate_{idx:03}.svg"));
            std::fs::write(&path, svg).map_err(io(&path))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn cmd_continue(cfg: &RunConfig, out_dir: &Path) -> Result<(), Failure> {
    let r2 = cfg.need_r2()?;
    if r2 <= 0.0 {
        return Err(Failure::Config("continue needs r2 > 0".into()));
    }
    if cfg.phis.is_empty() {
        return Err(Failure::Config("continue needs at least one `phi`".into()));
    }
    if cfg.explosion.is_some() && cfg.phis.len() != 1 {
        return Err(Failure::Config(
            "an explosion bracket applies to a single `phi`; list exactly one".into(),
        ));
    }
    let opts = cfg.continue_options();

    struct PhiResult {
        label: String,
        branch: Branch,
        fold: Option<Fold>,
        explosion: Option<ExplosionBracket>,
    }

    let results: Vec<PhiResult> = cfg
        .phis
        .par_iter()
        .map(|(label, phi): &(String, Phi)| {
            let branch = continue_branch(&cfg.model, phi, r2, &opts).map_err(numeric)?;
            let fold = locate_fold(&branch).ok();
            let explosion = match cfg.explosion {
                Some((lo, hi)) => Some(
                    locate_explosion(&cfg.model, phi, r2, lo, hi, &cfg.explosion_options())
                        .map_err(numeric)?,
                ),
                None => None,
            };
            Ok(PhiResult { label: label.clone(), branch, fold, explosion })
        })
        .collect::<Result<_, Failure>>()?;

    let mut series = Vec::new();
    let mut notes = Vec::new();
    for (k, r) in results.iter().enumerate() {
        let path = out_dir.join(format!("continue_{k}_{}.csv", slug(&r.label)));
        let mut csv = Csv::new(cfg.hash);
        csv.row(&["mu2", "mu", "x2_0", "y_hat_0", "period", "amp_x2", "amp_x", "floquet", "stable"]);
        for p in &r.branch.points {
            csv.row(&[
                format!("{}", p.mu2),
                format!("{}", p.mu2 * r2),
                format!("{}", p.x2_0),
                format!("{}", p.y_hat_0),
                format!("{}", p.period),
                format!("{}", p.amp_x2),
                format!("{}", p.amp_x2 * r2),
                format!("{}", p.floquet),
                format!("{}", p.stable),
            ]);
        }
        csv.write_to(&path).map_err(io(&path))?;

        let first = r.branch.points.first();
        let last = r.branch.points.last();
        println!(
            "phi = {}: {} points, mu2 from {} to {}, amplitude from {} to {}, wrote {}",
            r.label,
            r.branch.points.len(),
            first.map(|p| p.mu2).unwrap_or(f64::NAN),
            last.map(|p| p.mu2).unwrap_or(f64::NAN),
            first.map(|p| p.amp_x2).unwrap_or(f64::NAN),
            last.map(|p| p.amp_x2).unwrap_or(f64::NAN),
            path.display()
        );
        match &r.fold {
            Some(f) => println!(
                "  saddle-node: mu2 = {} at amplitude {} (point {})",
                f.mu2, f.amp_x2, f.index
            ),
            None => println!("  no saddle-node on the computed branch"),
        }
        if let Some(b) = &r.explosion {
            println!(
                "  amplitude explosion: mu2 in [{}, {}], midpoint {}, width {:e}",
                b.lo,
                b.hi,
                b.mid(),
                b.width()
            );
        }

        series.push(Series {
            label: r.label.clone(),
            points: r.branch.points.iter().map(|p| (p.mu2, p.amp_x2)).collect(),
        });
        if let Some(f) = &r.fold {
            notes.push(Annotation::Dot { x: f.mu2, y: f.amp_x2, label: "saddle-node".into() });
        }
        if let Some(b) = &r.explosion {
            notes.push(Annotation::VLine { x: b.mid(), label: "explosion".into() });
        }
        let _ = k;
    }

    if cfg.svg {
        let svg = render_plot(
            &format!("limit-cycle amplitude, r2 = {r2}"),
            "mu2",
            "x2 amplitude",
            &series,
            &notes,
        );
        let path = out_dir.join("amplitude.svg");
        std::fs::write(&path, svg).map_err(io(&path))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

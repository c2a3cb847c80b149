//! The harness subcommands. Each returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rcdnet::certificates::{bound_thm3, level_set_radii, radius_sq_weighted, RateCertificate};
use rcdnet::experiment::{aggregate_gaps, run_seeds};
use rcdnet::feasibility::{
    solve_projection_observed, ConvexSet, FeasibilityProblem, ProjectionOptions,
};
use rcdnet::graph::{enumerate_paths, make_topology, Topology};
use rcdnet::objective::{make_quadratic, QuadLogisticParams};
use rcdnet::oracle::{alternating_projections, optimal_multiplier, Optimum};
use rcdnet::par::{map_range, Execution};
use rcdnet::probdesign::{
    assemble_g_tau, compute_sigma_g, design_max_lambda2, design_max_sigma, dist_inverse_lipschitz,
    dist_lipschitz_power, dist_uniform, export_sdp, lambda2, SdpKind, StepRule,
};
use rcdnet::solver::{RunOptions, StopRule};
use rcdnet::{BlockVector, Network, PathDistribution, PathSet, SeparableObjective};

use crate::baselines::{center_free, projected_gradient};
use crate::config::{Config, DistKind, Family, SdpChoice, SetConfig, TopologyKind};
use crate::csvio::{num, Table};
use crate::distfile::DistFile;
use crate::error::CliError;

/// Shared state of one harness invocation.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: Config,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn prepare(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }
}

/// Network, objective and reference optimum of the configured instance.
pub struct Instance {
    pub g: Network,
    pub obj: SeparableObjective,
    pub opt: Optimum,
    pub x0: BlockVector,
    pub f0: f64,
}

pub fn build_network(cfg: &Config) -> Result<Network, CliError> {
    let kind = match cfg.network.kind {
        TopologyKind::Complete => Topology::Complete,
        TopologyKind::Ring => Topology::Ring,
        TopologyKind::Star => Topology::Star,
        TopologyKind::Random => Topology::RandomConnected {
            edge_prob: cfg.network.edge_prob,
            seed: cfg.network.seed,
        },
    };
    Ok(make_topology(kind, cfg.network.n)?)
}

pub fn build_objective(cfg: &Config) -> Result<SeparableObjective, CliError> {
    let n = cfg.network.n;
    let o = &cfg.objective;
    let obj = match o.family {
        Family::Apl1 => QuadLogisticParams::random_with_min_curvature(n, o.seed, o.min_curvature).objective()?,
        Family::Quadratic => {
            // centers reuse the apl1 draw so both families share a seed space
            let c = QuadLogisticParams::random(n, o.seed).c;
            make_quadratic(&vec![1.0; n], &c)?
        }
    };
    Ok(obj)
}

pub fn build_instance(cfg: &Config) -> Result<Instance, CliError> {
    let g = build_network(cfg)?;
    let obj = build_objective(cfg)?;
    let opt = optimal_multiplier(&obj)?;
    let x0 = BlockVector::zeros(obj.n_nodes(), obj.block_dim());
    let f0 = obj.eval(&x0)?;
    Ok(Instance { g, obj, opt, x0, f0 })
}

fn paths_of(cfg: &Config, g: &Network, tau: usize) -> Result<Arc<PathSet>, CliError> {
    Ok(Arc::new(enumerate_paths(g, tau, cfg.network.path_cap, cfg.network.seed)?))
}

/// The sampling distribution of kind `kind` for blocks of `tau` nodes.
/// Complete graphs use the implicit subset representation where available.
pub fn build_distribution(
    cfg: &Config,
    inst: &Instance,
    tau: usize,
    kind: DistKind,
) -> Result<PathDistribution, CliError> {
    let l = inst.obj.lipschitz();
    let complete = inst.g.is_complete();
    let dist = match kind {
        DistKind::Uniform if complete => PathDistribution::complete_uniform(inst.g.n_nodes(), tau)?,
        DistKind::InverseLipschitz if complete => PathDistribution::complete_inverse_lipschitz(tau, l)?,
        DistKind::LipschitzPower if complete => {
            PathDistribution::complete_lipschitz_power(tau, l, cfg.run.alpha)?
        }
        DistKind::Uniform => dist_uniform(&paths_of(cfg, &inst.g, tau)?),
        DistKind::InverseLipschitz => dist_inverse_lipschitz(&paths_of(cfg, &inst.g, tau)?, l)?,
        DistKind::LipschitzPower => dist_lipschitz_power(&paths_of(cfg, &inst.g, tau)?, l, cfg.run.alpha)?,
        DistKind::DesignedLambda2 => {
            let rule = StepRule::Diminishing { scale: cfg.design.step_scale };
            design_max_lambda2(&paths_of(cfg, &inst.g, tau)?, l, cfg.run.design_iters, rule)?.distribution
        }
        DistKind::DesignedSigma => {
            let sigma = positive_sigma(&inst.obj)
                .ok_or_else(|| CliError::Config("designed_sigma needs a strongly convex objective".into()))?;
            let rule = StepRule::Diminishing { scale: cfg.design.step_scale };
            design_max_sigma(&paths_of(cfg, &inst.g, tau)?, l, &sigma, cfg.run.design_iters, rule)?
                .distribution
        }
        DistKind::File => {
            let path = cfg.run.distribution_file.as_ref().expect("validated");
            let file = DistFile::read(path)?;
            if file.tau != tau {
                return Err(CliError::Config(format!(
                    "{} holds tau = {}, run asks for tau = {tau}",
                    path.display(),
                    file.tau
                )));
            }
            file.to_distribution(&inst.g)?
        }
    };
    Ok(dist)
}

fn positive_sigma(obj: &SeparableObjective) -> Option<Vec<f64>> {
    obj.strong_convexity()
        .filter(|s| s.iter().all(|&v| v > 0.0))
        .map(<[f64]>::to_vec)
}

fn seeds(cfg: &Config, count: usize) -> Vec<u64> {
    (0..count as u64).map(|s| cfg.run.first_seed + s).collect()
}

/// Spectral constants and rate certificates for one distribution.
struct Certs {
    lambda2: f64,
    lambda_max: f64,
    sigma_g: f64,
    thm1: Option<RateCertificate>,
    thm3: Option<RateCertificate>,
}

fn certificates(
    inst: &Instance,
    dist: &PathDistribution,
    kind: DistKind,
    radii: &[f64],
) -> Result<Certs, CliError> {
    let l = inst.obj.lipschitz();
    let mut c = Certs {
        lambda2: f64::NAN,
        lambda_max: f64::NAN,
        sigma_g: f64::NAN,
        thm1: None,
        thm3: None,
    };
    // G_tau is unavailable for implicit distributions other than 1/L weights
    if let Ok(gt) = assemble_g_tau(l, dist) {
        c.lambda2 = lambda2(&gt);
        c.lambda_max = gt.lambda_max();
        if let Some(sigma) = positive_sigma(&inst.obj) {
            c.sigma_g = compute_sigma_g(&gt, &sigma)?;
        }
        c.thm1 = Some(RateCertificate::SmoothThm1 {
            radius_sq: radius_sq_weighted(&gt, l, radii)?,
        });
    }
    if inst.g.is_complete() && kind == DistKind::InverseLipschitz && dist.pathset().is_none() {
        c.thm3 = Some(RateCertificate::CompleteGraphThm3 {
            lipschitz: l.to_vec(),
            radii: radii.to_vec(),
            n: inst.g.n_nodes(),
            tau: dist.tau(),
        });
    }
    Ok(c)
}

fn topology_name(cfg: &Config) -> &'static str {
    match cfg.network.kind {
        TopologyKind::Complete => "complete",
        TopologyKind::Ring => "ring",
        TopologyKind::Star => "star",
        TopologyKind::Random => "random",
    }
}

fn family_name(cfg: &Config) -> &'static str {
    match cfg.objective.family {
        Family::Apl1 => "apl1",
        Family::Quadratic => "quadratic",
    }
}

fn instance_meta(t: &mut Table, cfg: &Config, inst: &Instance) {
    t.meta("n", inst.g.n_nodes())
        .meta("topology", topology_name(cfg))
        .meta("family", family_name(cfg))
        .meta("objective_seed", cfg.objective.seed)
        .meta("f_star", num(inst.opt.f))
        .meta("f0", num(inst.f0));
}

/// One CSV per `(tau, seed)` and one aggregate per `tau`.
pub fn cmd_solve(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    ctx.prepare()?;
    let cfg = &ctx.cfg;
    let inst = build_instance(cfg)?;
    let n = inst.g.n_nodes();
    let radii = level_set_radii(&inst.obj, &inst.opt.x, inst.f0)?;
    let seeds = seeds(cfg, cfg.run.seeds);
    let iters = cfg.run.budget_per_node * n;
    let mut written = Vec::new();
    for &tau in &cfg.run.taus {
        let kind = cfg.run.distribution;
        let dist = build_distribution(cfg, &inst, tau, kind)?;
        let certs = certificates(&inst, &dist, kind, &radii)?;
        let opts = RunOptions {
            trace_stride: cfg.run.trace_stride,
            divergence_ceiling: None,
        };
        let reports = run_seeds(
            &inst.obj,
            &inst.g,
            &dist,
            &inst.x0,
            &StopRule::iterations(iters),
            &opts,
            &seeds,
            Execution::Parallel,
        )?;
        let header = |t: &mut Table| {
            instance_meta(t, cfg, &inst);
            t.meta("tau", tau)
                .meta("distribution", kind.name())
                .meta("iterations", iters)
                .meta("lambda2", num(certs.lambda2))
                .meta("lambda_max", num(certs.lambda_max))
                .meta("sigma_g", num(certs.sigma_g))
                .meta("sum_l_r2", num(inst.obj.lipschitz().iter().zip(&radii).map(|(l, r)| l * r * r).sum::<f64>()));
            for cert in [&certs.thm1, &certs.thm3].into_iter().flatten() {
                t.meta(&format!("certificate.{}", cert.kind()), cert.describe());
            }
        };
        for (seed, r) in seeds.iter().zip(&reports) {
            let mut t = Table::new(&["k", "k_over_N", "gap"]);
            header(&mut t);
            t.meta("seed", seed);
            for p in &r.trace {
                t.push(vec![p.k as f64, p.k as f64 / n as f64, p.f - inst.opt.f]);
            }
            let path = ctx.path(&format!("solve_tau{tau}_seed{seed}.csv"));
            t.write(&path)?;
            written.push(path);
        }
        let mut t = Table::new(&[
            "k",
            "k_over_N",
            "gap_mean",
            "gap_min",
            "gap_max",
            "bound_thm1",
            "bound_thm3",
        ]);
        header(&mut t);
        t.meta("seeds", format!("{}..{}", seeds[0], seeds[seeds.len() - 1] + 1));
        let bound = |c: &Option<RateCertificate>, k: usize| c.as_ref().map_or(f64::NAN, |c| c.bound(k));
        for s in aggregate_gaps(&reports, inst.opt.f)? {
            t.push(vec![
                s.k as f64,
                s.k as f64 / n as f64,
                s.mean,
                s.min,
                s.max,
                bound(&certs.thm1, s.k),
                bound(&certs.thm3, s.k),
            ]);
        }
        let path = ctx.path(&format!("solve_tau{tau}.csv"));
        t.write(&path)?;
        let last = t.rows.last().expect("trace holds the final point");
        ctx.say(format!(
            "tau={tau}: mean gap {:.3e} after {} iterations ({} seeds), lambda2={:.4e}, thm3 bound {:.3e}",
            last[2],
            iters,
            seeds.len(),
            certs.lambda2,
            if certs.thm3.is_some() {
                bound_thm3(inst.obj.lipschitz(), &radii, n, tau, iters)
            } else {
                f64::NAN
            }
        ));
        written.push(path);
    }
    Ok(written)
}

/// Candidate distributions with their spectral constants; writes one
/// distribution file per candidate and a report table.
pub fn cmd_design(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    ctx.prepare()?;
    let cfg = &ctx.cfg;
    let inst = build_instance(cfg)?;
    let tau = cfg.design.tau;
    let l = inst.obj.lipschitz();
    let paths = paths_of(cfg, &inst.g, tau)?;
    let rule = StepRule::Diminishing { scale: cfg.design.step_scale };
    let sigma = positive_sigma(&inst.obj);

    let mut candidates: Vec<(&str, PathDistribution)> = vec![
        ("uniform", dist_uniform(&paths)),
        ("inverse_lipschitz", dist_inverse_lipschitz(&paths, l)?),
        ("lipschitz_power", dist_lipschitz_power(&paths, l, cfg.design.alpha)?),
        (
            "designed_lambda2",
            design_max_lambda2(&paths, l, cfg.design.iters, rule)?.distribution,
        ),
    ];
    if let Some(s) = &sigma {
        candidates.push((
            "designed_sigma",
            design_max_sigma(&paths, l, s, cfg.design.iters, rule)?.distribution,
        ));
    }

    let mut report = Table::new(&["candidate", "lambda2", "sigma_g", "lambda_max"]);
    instance_meta(&mut report, cfg, &inst);
    report.meta("tau", tau).meta("paths", paths.len()).meta("design_iters", cfg.design.iters);
    let mut written = Vec::new();
    for (idx, (name, dist)) in candidates.iter().enumerate() {
        let gt = assemble_g_tau(l, dist)?;
        let l2 = lambda2(&gt);
        let sg = match &sigma {
            Some(s) => compute_sigma_g(&gt, s)?,
            None => f64::NAN,
        };
        report.meta(&format!("candidate.{idx}"), name);
        report.push(vec![idx as f64, l2, sg, gt.lambda_max()]);
        ctx.say(format!("{name:>18}: lambda2 = {l2:.6e}  sigma_G = {sg:.6e}"));
        let path = ctx.path(&format!("design_{name}.dist"));
        DistFile::from_distribution(name, dist)?.write(&path)?;
        written.push(path);
    }
    let path = ctx.path("design_report.csv");
    report.write(&path)?;
    written.push(path);
    if cfg.design.export_sdp {
        let radii = level_set_radii(&inst.obj, &inst.opt.x, inst.f0)?;
        let out = ctx.path("design_radius.dat-s");
        let sidecar = export_sdp(&paths, l, &SdpKind::RadiusBound { radii }, &out)?;
        written.push(out);
        written.push(sidecar);
    }
    Ok(written)
}

/// Gap of the two full-gradient baselines and RCD_2 (uniform, 1/L) against
/// normalized work. One full iteration evaluates `N` gradients, as do `N/2`
/// steps of RCD_2, so rows advance by one full iteration or `N/2` RCD steps.
pub fn cmd_compare(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    ctx.prepare()?;
    let cfg = &ctx.cfg;
    let inst = build_instance(cfg)?;
    let n = inst.g.n_nodes();
    let rows = 2 * cfg.compare.budget_per_node;
    let stride = (n / 2).max(1);
    let seeds = seeds(cfg, cfg.compare.seeds.unwrap_or(cfg.run.seeds));

    let (x_pg, pg) = projected_gradient(&inst.obj, &inst.x0, rows)?;
    let (x_cf, cf) = center_free(&inst.obj, &inst.g, &inst.x0, rows)?;

    let mut residual = vec![x_pg.coupling_residual(), x_cf.coupling_residual()];
    let mut rcd = Vec::new();
    for kind in [DistKind::Uniform, DistKind::InverseLipschitz] {
        let dist = build_distribution(cfg, &inst, 2, kind)?;
        let opts = RunOptions {
            trace_stride: Some(stride),
            divergence_ceiling: None,
        };
        let reports = run_seeds(
            &inst.obj,
            &inst.g,
            &dist,
            &inst.x0,
            &StopRule::iterations(rows * stride),
            &opts,
            &seeds,
            Execution::Parallel,
        )?;
        residual.push(reports.iter().map(|r| r.x.coupling_residual()).fold(0.0, f64::max));
        rcd.push(aggregate_gaps(&reports, inst.opt.f)?);
    }

    let mut t = Table::new(&[
        "k_over_N",
        "projected_gradient",
        "center_free",
        "rcd2_uniform",
        "rcd2_inverse_lipschitz",
    ]);
    instance_meta(&mut t, cfg, &inst);
    t.meta("rows", rows)
        .meta("rcd_steps_per_row", stride)
        .meta("seeds", seeds.len())
        .meta("center_free_scale", "metropolis/(2 L_max)")
        .meta("residual.projected_gradient", num(residual[0]))
        .meta("residual.center_free", num(residual[1]))
        .meta("residual.rcd2_uniform", num(residual[2]))
        .meta("residual.rcd2_inverse_lipschitz", num(residual[3]));
    for r in 0..=rows {
        t.push(vec![
            (r * stride) as f64 / n as f64,
            pg[r] - inst.opt.f,
            cf[r] - inst.opt.f,
            rcd[0][r].mean,
            rcd[1][r].mean,
        ]);
    }
    let path = ctx.path("compare.csv");
    t.write(&path)?;
    let last = t.rows.last().expect("row 0 always exists");
    ctx.say(format!(
        "final gaps: projected gradient {:.3e}, center-free {:.3e}, RCD2 uniform {:.3e}, RCD2 1/L {:.3e}",
        last[1], last[2], last[3], last[4]
    ));
    Ok(vec![path])
}

fn build_set(s: &SetConfig) -> Result<ConvexSet, CliError> {
    Ok(match s {
        SetConfig::Box { lo, hi } => ConvexSet::new_box(lo.clone(), hi.clone())?,
        SetConfig::Ball { center, radius } => ConvexSet::ball(center.clone(), *radius)?,
        SetConfig::Halfspace { a, b } => ConvexSet::halfspace(a.clone(), *b)?,
    })
}

/// About `points` log-spaced iteration counts in `[1, iters]`, ending at `iters`.
pub fn log_grid(iters: usize, points: usize) -> Vec<usize> {
    let top = (iters as f64).ln();
    let mut ks: Vec<usize> = (0..points)
        .map(|j| (top * j as f64 / (points - 1) as f64).exp().round() as usize)
        .map(|k| k.clamp(1, iters))
        .collect();
    ks.push(iters);
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// Dual RCD on a projection problem; mean primal errors against the bounds.
pub fn cmd_feasibility(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    ctx.prepare()?;
    let f = &ctx.cfg.feasibility;
    let sets = f.sets.iter().map(build_set).collect::<Result<Vec<_>, _>>()?;
    let n = sets.len();
    let v_star = alternating_projections(&sets, &f.v0, 1e-13, 1_000_000)?;
    let prob = match &f.weights {
        Some(w) => FeasibilityProblem::new(sets, f.v0.clone(), w.clone())?,
        None => FeasibilityProblem::uniform(sets, f.v0.clone())?,
    }
    .with_loose_lipschitz(f.loose_lipschitz);
    let g = make_topology(Topology::Complete, n)?;
    let dist = PathDistribution::complete_inverse_lipschitz(f.tau, &prob.lipschitz())?;
    let gt = assemble_g_tau(&prob.lipschitz(), &dist)?;
    let l2 = lambda2(&gt);
    let radius_sq = prob.radius_sq_bound(&f.inner_center, f.inner_radius, l2)?;
    let bounds = prob.primal_error_bounds(radius_sq, gt.lambda_max());

    let grid = log_grid(f.iters, f.trace_points);
    let seeds = seeds(&ctx.cfg, f.seeds.unwrap_or(ctx.cfg.run.seeds));
    let opts = ProjectionOptions {
        iters: f.iters,
        run: RunOptions {
            trace_stride: Some(1),
            divergence_ceiling: Some(1e12),
        },
    };
    let per_seed = map_range(Execution::Parallel, seeds.len(), |s| {
        let mut rows = Vec::with_capacity(grid.len());
        let mut next = 0;
        solve_projection_observed(&prob, &g, &dist, &opts, seeds[s], |k, u| {
            if next < grid.len() && grid[next] == k {
                rows.push((prob.infeasibility(u, &v_star), prob.suboptimality(u, &v_star)));
                next += 1;
            }
        })
        .map(|_| rows)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let mut t = Table::new(&["k", "infeas_mean", "infeas_bound", "subopt_mean", "subopt_bound"]);
    t.meta("n", n)
        .meta("dim", prob.dim())
        .meta("tau", f.tau)
        .meta("seeds", seeds.len())
        .meta("loose_lipschitz", f.loose_lipschitz)
        .meta("v_star", format!("{v_star:?}"))
        .meta("g_star", num(prob.optimal_value(&v_star)))
        .meta("lambda2", num(l2))
        .meta("lambda_max", num(gt.lambda_max()))
        .meta("sigma_min", num(prob.sigma_min()))
        .meta("radius_sq", num(radius_sq));
    for (j, &k) in grid.iter().enumerate() {
        let m = seeds.len() as f64;
        let infeas = per_seed.iter().map(|r| r[j].0).sum::<f64>() / m;
        let subopt = per_seed.iter().map(|r| r[j].1).sum::<f64>() / m;
        t.push(vec![
            k as f64,
            infeas,
            bounds.infeasibility(k),
            subopt,
            bounds.suboptimality(k),
        ]);
    }
    let path = ctx.path("feasibility.csv");
    t.write(&path)?;
    let last = t.rows.last().expect("grid is nonempty");
    ctx.say(format!(
        "k={}: infeasibility {:.3e} (bound {:.3e}), suboptimality {:.3e} (bound {:.3e})",
        f.iters, last[1], last[2], last[3], last[4]
    ));
    Ok(vec![path])
}

/// Writes the configured design SDP in SDPA sparse format plus its sidecar.
pub fn cmd_export_sdp(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    ctx.prepare()?;
    let cfg = &ctx.cfg;
    let inst = build_instance(cfg)?;
    let paths = paths_of(cfg, &inst.g, cfg.sdp.tau)?;
    let kind = match cfg.sdp.kind {
        SdpChoice::RadiusBound => SdpKind::RadiusBound {
            radii: level_set_radii(&inst.obj, &inst.opt.x, inst.f0)?,
        },
        SdpChoice::MaxLambda2 => SdpKind::MaxLambda2,
    };
    let out = ctx.path(&cfg.sdp.file);
    let sidecar = export_sdp(&paths, inst.obj.lipschitz(), &kind, &out)?;
    ctx.say(format!("wrote {} and {}", out.display(), sidecar.display()));
    Ok(vec![out, sidecar])
}

/// Reads a distribution file written by `design`.
pub fn read_distribution(path: &Path, g: &Network) -> Result<PathDistribution, CliError> {
    DistFile::read(path)?.to_distribution(g)
}

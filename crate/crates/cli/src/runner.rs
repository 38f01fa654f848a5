//! Executes a [`RunConfig`]: Monte Carlo per size, the matching theory,
//! comparison gates, plots and the manifest.

use std::path::PathBuf;

use log::{info, warn};
use srmt_core::averaged::{self, averaged_table, AveragedPoint};
use srmt_core::mc::{self, BinGrid, EnergyWindow, EnsembleSpec, ProfileSource};
use srmt_core::saddle::{self, analytic_table, sites_table, SpectralAnalytic};
use srmt_core::table::Cell;
use srmt_core::{fractal_dimension_fit, DiagonalProfile, DosBin, Table};

use crate::compare::{compare_report, ToleranceSpec};
use crate::config::{ProfileKind, RunConfig, WidthRule, WindowSpec};
use crate::error::{CliError, CliResult};
use crate::manifest::write_manifest;
use crate::svg::{Plot, Series};

/// Sub-points per histogram bin when averaging the theory over the bin.
const BIN_SUBPOINTS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    /// Written files relative to `output_dir`, manifest last.
    pub files: Vec<String>,
    pub gates: Vec<Gate>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

/// Runs the experiment, on a dedicated pool when `threads` is set.
pub fn run(config: &RunConfig) -> CliResult<RunOutcome> {
    match config.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {k} threads: {e}")))?
            .install(|| Runner::new(config).execute()),
        None => Runner::new(config).execute(),
    }
}

/// Theory for the moments at one size.
enum Theory {
    Fixed(DiagonalProfile),
    Averaged { sigma: f64 },
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    files: Vec<String>,
    gates: Vec<Gate>,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            files: Vec::new(),
            gates: Vec::new(),
        }
    }

    fn save_table(&mut self, rel: &str, table: &Table) -> CliResult<()> {
        table.write_path(self.cfg.output_dir.join(rel))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn save_svg(&mut self, rel: &str, plot: &Plot) -> CliResult<()> {
        let path = self.cfg.output_dir.join(rel);
        std::fs::write(&path, plot.render()).map_err(|e| CliError::io(&path, e))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn fixed_profile(&self, n: usize) -> CliResult<DiagonalProfile> {
        match self.cfg.profile {
            ProfileKind::Uniform => Ok(DiagonalProfile::uniform(n)?),
            ProfileKind::InverseIndex => Ok(srmt_core::model::build_inverse_index_profile(n)?),
            ProfileKind::File => {
                let path = self.cfg.profile_file.as_deref().expect("validated");
                let p = DiagonalProfile::from_table(&Table::read_path(path)?)?;
                if p.n() != n {
                    return Err(CliError::invalid(
                        "n_list",
                        format!("{} holds {} sites but N = {n} was requested", path.display(), p.n()),
                    ));
                }
                Ok(p)
            }
        }
    }

    fn window(&self, n: usize) -> EnergyWindow {
        let center = self.cfg.energy;
        match self.cfg.window {
            WindowSpec::NearestK { count: None } => EnergyWindow::default_for(center, n),
            WindowSpec::NearestK { count: Some(count) } => EnergyWindow::NearestK { center, count },
            WindowSpec::HalfWidth { half_width } => EnergyWindow::HalfWidth { center, half_width },
        }
    }

    fn execute(mut self) -> CliResult<RunOutcome> {
        let cfg = self.cfg;
        let out = &cfg.output_dir;
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let mut sizes = cfg.n_list.clone();
        sizes.sort_unstable();
        sizes.dedup();

        let mut scaling: Vec<Table> = cfg
            .q_list
            .iter()
            .map(|q| {
                Table::new([
                    "N".to_string(),
                    "sigma".into(),
                    "E_window".into(),
                    "states_per_realization".into(),
                    format!("I{q}_mc"),
                    format!("I{q}_stderr"),
                    format!("I{q}_theory"),
                ])
            })
            .collect();

        for &n in &sizes {
            let dir = format!("N{n}");
            std::fs::create_dir_all(out.join(&dir)).map_err(|e| CliError::io(out.join(&dir), e))?;
            let (source, theory) = match cfg.width {
                Some(w) => {
                    let sigma = w.sigma(n);
                    (ProfileSource::GaussianW { n, sigma }, Theory::Averaged { sigma })
                }
                None => {
                    let p = self.fixed_profile(n)?;
                    (ProfileSource::Fixed(p.clone()), Theory::Fixed(p))
                }
            };
            let grid = cfg
                .dos
                .map(|d| BinGrid::uniform(d.lo, d.hi, d.bins).map(|g| g.excluding_band(d.exclude_band)))
                .transpose()?;
            info!("N = {n}: {} realizations", cfg.realizations);
            let report = mc::run_ensemble(&EnsembleSpec {
                source,
                realizations: cfg.realizations,
                window: self.window(n),
                q_list: cfg.q_list.clone(),
                grid,
                base_seed: cfg.base_seed,
            })?;
            for p in report.write_csvs(&out.join(&dir))? {
                let name = p.file_name().and_then(|f| f.to_str()).unwrap_or_default();
                self.files.push(format!("{dir}/{name}"));
            }

            let e_window = if cfg.q_list.is_empty() {
                cfg.energy
            } else {
                report.mean_window_energy
            };
            let theory_moments = self.theory_outputs(&dir, n, &theory, e_window)?;
            if let Some(bins) = &report.dos {
                self.dos_outputs(&dir, n, &theory, bins)?;
            }
            let sigma = match theory {
                Theory::Averaged { sigma } => sigma,
                Theory::Fixed(_) => f64::NAN,
            };
            for (table, (q, th)) in scaling.iter_mut().zip(theory_moments) {
                let m = report.moment(q).expect("every q is estimated").total;
                table.push(vec![
                    n.into(),
                    sigma.into(),
                    e_window.into(),
                    report.mean_window_states.into(),
                    m.value.into(),
                    m.std_error.into(),
                    th.into(),
                ]);
            }
        }

        for (table, &q) in scaling.iter().zip(&cfg.q_list) {
            self.scaling_outputs(table, q, &sizes)?;
        }

        let manifest_files = self.files.clone();
        write_manifest(out, &manifest_files)?;
        self.files.push(crate::manifest::MANIFEST.to_string());
        Ok(RunOutcome {
            output_dir: out.clone(),
            files: self.files,
            gates: self.gates,
        })
    }

    /// Writes the analytic or averaged curve for size `n` and returns the
    /// predicted `Î_q` for each configured `q`.
    fn theory_outputs(&mut self, dir: &str, n: usize, theory: &Theory, e_window: f64) -> CliResult<Vec<(u32, f64)>> {
        let cfg = self.cfg;
        let energies = cfg.curve.map_or_else(|| vec![cfg.energy], |c| c.energies());
        match theory {
            Theory::Fixed(profile) => {
                let points: Vec<SpectralAnalytic> = saddle::solve_sweep(profile, &energies)
                    .into_iter()
                    .zip(&energies)
                    .filter_map(|(r, e)| match r {
                        Ok(sp) => Some(SpectralAnalytic::from_saddle(profile, sp, &cfg.q_list)),
                        Err(err) => {
                            warn!("N = {n}, E = {e}: {err}");
                            None
                        }
                    })
                    .collect::<srmt_core::Result<_>>()?;
                self.save_table(&format!("{dir}/analytic.csv"), &analytic_table(&points, &cfg.q_list))?;
                let at_window = SpectralAnalytic::compute(profile, e_window, &cfg.q_list, None)?;
                self.save_table(&format!("{dir}/sites.csv"), &sites_table(profile, &at_window))?;
                Ok(cfg.q_list.iter().map(|q| (*q, at_window.total_moments[q])).collect())
            }
            Theory::Averaged { sigma } => {
                let points: Vec<AveragedPoint> = averaged::solve_averaged_sweep(&energies, *sigma)
                    .into_iter()
                    .zip(&energies)
                    .filter_map(|(r, e)| match r {
                        Ok(sol) => Some(AveragedPoint::compute(sol, n, &cfg.q_list)),
                        Err(err) => {
                            warn!("N = {n}, E = {e}: {err}");
                            None
                        }
                    })
                    .collect::<srmt_core::Result<_>>()?;
                self.save_table(&format!("{dir}/averaged.csv"), &averaged_table(&points, &cfg.q_list))?;
                // The averaged theory is quoted at the configured energy.
                let sol = averaged::solve_averaged(cfg.energy, *sigma, None)?;
                cfg.q_list
                    .iter()
                    .map(|&q| Ok((q, averaged::averaged_moment(q, &sol, n)?)))
                    .collect()
            }
        }
    }

    fn dos_outputs(&mut self, dir: &str, n: usize, theory: &Theory, bins: &[DosBin]) -> CliResult<()> {
        let mut th = Table::new(["E", "rho"]);
        let mut curve = Vec::with_capacity(bins.len());
        for b in bins {
            let rho = bin_average(b, |e| theory_dos(theory, e))?;
            th.push(vec![b.center.into(), rho.into()]);
            curve.push((b.center, rho));
        }
        self.save_table(&format!("{dir}/dos_theory.csv"), &th)?;

        // With d = 0 the spectrum is symmetric, so mirror bins are pooled
        // before comparing.
        let mc_bins = match theory {
            Theory::Averaged { .. } => symmetrize(bins),
            Theory::Fixed(_) => bins.to_vec(),
        };
        let mut mc_table = Table::new(["E", "rho", "stderr"]);
        for b in &mc_bins {
            mc_table.push(vec![b.center.into(), b.rho.into(), b.std_error.into()]);
        }

        let gates = self.cfg.gates;
        if gates.dos_max_rel.is_some() || gates.dos_max_abs.is_some() {
            let mut spec = ToleranceSpec::new("E", "rho", "rho");
            spec.stderr_column = Some("stderr".into());
            spec.max_rel = gates.dos_max_rel;
            spec.max_abs = gates.dos_max_abs;
            spec.key_range = gates.dos_range;
            let report = compare_report(&th, &mc_table, &spec)?;
            self.save_table(&format!("{dir}/compare_dos.csv"), &report.to_table())?;
            self.gates.push(Gate {
                name: format!("dos N={n}"),
                pass: report.pass,
                detail: format!(
                    "{} bins, max abs dev {:.3e}, max rel dev {:.3e}",
                    report.rows.len(),
                    report.worst_abs(),
                    report.worst_rel()
                ),
            });
        }

        let plot = Plot {
            title: format!("Density of states, N = {n}"),
            x_label: "E".into(),
            y_label: "rho(E)".into(),
            series: vec![
                Series::line("theory", curve),
                Series::markers("Monte Carlo", bins.iter().map(|b| (b.center, b.rho, b.std_error))),
            ],
            ..Plot::default()
        };
        self.save_svg(&format!("{dir}/dos.svg"), &plot)
    }

    fn scaling_outputs(&mut self, table: &Table, q: u32, sizes: &[usize]) -> CliResult<()> {
        let name = format!("scaling_q{q}.csv");
        self.save_table(&name, table)?;
        let gates = self.cfg.gates;
        if let Some(max_z) = gates.max_z {
            let mut spec = ToleranceSpec::new("N", &format!("I{q}_theory"), &format!("I{q}_mc"));
            spec.stderr_column = Some(format!("I{q}_stderr"));
            spec.max_z = Some(max_z);
            let report = compare_report(table, table, &spec)?;
            self.save_table(&format!("compare_q{q}.csv"), &report.to_table())?;
            self.gates.push(Gate {
                name: format!("moments q={q}"),
                pass: report.pass,
                detail: format!(
                    "{} sizes, max |z| {:.2} (limit {max_z})",
                    report.rows.len(),
                    report.worst_z().unwrap_or(f64::NAN)
                ),
            });
        }

        let ns: Vec<f64> = table.column_f64("N")?;
        let mc = table.column_f64(&format!("I{q}_mc"))?;
        let se = table.column_f64(&format!("I{q}_stderr"))?;
        let th = table.column_f64(&format!("I{q}_theory"))?;

        let gamma = match self.cfg.width {
            Some(WidthRule::Gamma(g)) => Some(g),
            Some(WidthRule::Sigma(_)) => Some(0.0),
            None => None,
        };
        let fit = match gamma {
            Some(g) if q >= 2 && fit_possible(sizes) => {
                let series: Vec<(usize, f64)> = sizes.iter().copied().zip(mc.iter().copied()).collect();
                Some(fractal_dimension_fit(&series, q, g)?)
            }
            _ => None,
        };
        if let Some(f) = fit {
            let mut t = Table::new(["q", "gamma", "exponent_fit", "exponent_stderr", "exponent_theory", "D_q_fit", "D_q"]);
            t.push(vec![
                Cell::from(f.q),
                f.gamma.into(),
                f.exponent_fit.into(),
                f.exponent_std_error.into(),
                f.exponent_theory.into(),
                f.d_q_fit.into(),
                f.d_q.into(),
            ]);
            self.save_table(&format!("fit_q{q}.csv"), &t)?;
        }
        if let Some(tol) = gates.slope_tol {
            let gate = match fit {
                Some(f) => Gate {
                    name: format!("scaling exponent q={q}"),
                    pass: (f.exponent_fit - f.exponent_theory).abs() <= tol,
                    detail: format!(
                        "fitted {:.3} +- {:.3}, expected {:.3} (tol {tol}); D_q = {:.3}",
                        f.exponent_fit, f.exponent_std_error, f.exponent_theory, f.d_q_fit
                    ),
                },
                None => Gate {
                    name: format!("scaling exponent q={q}"),
                    pass: false,
                    detail: "needs a Gaussian-W run over >= 4 sizes spanning a factor of 8".into(),
                },
            };
            self.gates.push(gate);
        }

        if sizes.len() > 1 {
            let plot = Plot {
                title: format!("I{q} versus N"),
                x_label: "N".into(),
                y_label: format!("I{q}"),
                log_x: true,
                log_y: true,
                series: vec![
                    Series::line("theory", ns.iter().copied().zip(th.iter().copied())),
                    Series::markers(
                        "Monte Carlo",
                        ns.iter().zip(&mc).zip(&se).map(|((n, m), s)| (*n, *m, *s)),
                    ),
                ],
            };
            self.save_svg(&format!("scaling_q{q}.svg"), &plot)?;
        }
        Ok(())
    }
}

fn fit_possible(sizes: &[usize]) -> bool {
    sizes.len() >= 4 && sizes[sizes.len() - 1] as f64 / sizes[0] as f64 >= 8.0
}

fn theory_dos(theory: &Theory, e: f64) -> CliResult<f64> {
    match theory {
        Theory::Fixed(profile) => match saddle::solve_saddle(profile, e, None) {
            Ok(sp) => Ok(saddle::dos_analytic(profile, e, &sp)?),
            Err(srmt_core::Error::SpectralEdge { .. }) => Ok(0.0),
            Err(err) => Err(err.into()),
        },
        Theory::Averaged { sigma } => {
            let sol = averaged::solve_averaged(e.abs(), *sigma, None)?;
            Ok(averaged::dos_averaged(&sol))
        }
    }
}

/// Midpoint average of `f` over the bin.
fn bin_average(b: &DosBin, f: impl Fn(f64) -> CliResult<f64>) -> CliResult<f64> {
    let mut acc = 0.0;
    for k in 0..BIN_SUBPOINTS {
        let e = b.center - 0.5 * b.width + b.width * (k as f64 + 0.5) / BIN_SUBPOINTS as f64;
        acc += f(e)?;
    }
    Ok(acc / BIN_SUBPOINTS as f64)
}

/// Pools each bin with its mirror image `-E` when present.
fn symmetrize(bins: &[DosBin]) -> Vec<DosBin> {
    bins.iter()
        .map(|b| {
            match bins
                .iter()
                .find(|m| (m.center + b.center).abs() <= 1e-9 * b.width && (m.width - b.width).abs() <= 1e-12)
            {
                Some(m) if m.center != b.center => DosBin {
                    rho: 0.5 * (b.rho + m.rho),
                    std_error: 0.5 * b.std_error.hypot(m.std_error),
                    ..*b
                },
                _ => *b,
            }
        })
        .collect()
}

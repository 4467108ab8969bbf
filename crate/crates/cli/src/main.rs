use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tespar_snn::energy::{energy_csv, energy_estimate, EnergyTable};
use tespar_snn::hwsim::{hw_run, trace_hex, Comparator, HwConfig, WeightRom};
use tespar_snn::mlp::{evaluate, read_model, train, write_model};
use tespar_snn::pipeline::{
    import_features, read_features_csv, repro, synth_features, to_samples, write_features_csv, write_synth_corpus,
    FeatureRow, FeatureSplit, RunConfig,
};
use tespar_snn::robustness::{
    quant_csv, quant_sweep, quantize_model, robustness_sweep, variation_csv, InferencePath, PerturbMode, PerturbSpec,
    Rounding, HW_FORMAT,
};
use tespar_snn::snn::{evaluate_snn, run_snn, spike_stats, sweep_rv, SnnConfig};
use tespar_snn::MlpModelF64;

#[derive(Parser)]
#[command(name = "tespar-snn", version, about = "D/S feature extraction, MLP training and spiking inference")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or import audio corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Compute D/S feature tables.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Train the zero-bias MLP on a feature table.
    Train(TrainArgs),
    /// Accuracy of a model on one split.
    Eval(EvalArgs),
    /// Rate-coded spiking inference.
    #[command(subcommand)]
    Snn(SnnCmd),
    /// Bit-level datapath model.
    #[command(subcommand)]
    Hwsim(HwCmd),
    /// Quantisation and weight-variation sweeps.
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// Spike-energy estimates.
    #[command(subcommand)]
    Energy(EnergyCmd),
    /// Run the whole chain from one seed and hash every artifact.
    Repro(ReproArgs),
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Write a synthetic corpus as WAV files plus labels.csv.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Total windows (split evenly between classes).
        #[arg(long)]
        total: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Turn a `path,label` manifest of recordings into a feature table.
    Import {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// Feature table from a corpus directory or straight from the synthesiser.
    Extract {
        /// Directory containing labels.csv.
        #[arg(long, conflicts_with = "synth")]
        corpus: Option<PathBuf>,
        #[arg(long)]
        synth: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        total: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        d_max: Option<usize>,
        #[arg(long)]
        s_max: Option<usize>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Training curve CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    features: PathBuf,
    /// train, validation, test or all.
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args, Clone)]
struct SpikeArgs {
    #[arg(long = "rate")]
    r_max_hz: Option<f64>,
    #[arg(long)]
    vt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// ann, snn or hw.
    #[arg(long, default_value = "ann")]
    path: String,
    #[command(flatten)]
    spikes: SpikeArgs,
}

#[derive(Subcommand)]
enum SnnCmd {
    /// Spike statistics for one window.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[command(flatten)]
        spikes: SpikeArgs,
        /// Write the full stats as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Accuracy over an (input rate, threshold) grid.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        r_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        vt_grid: Option<Vec<f64>>,
        #[command(flatten)]
        spikes: SpikeArgs,
    },
}

#[derive(Subcommand)]
enum HwCmd {
    /// Run one window through the fixed-point datapath.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[command(flatten)]
        spikes: SpikeArgs,
        /// Use the strict `q > state` input comparator.
        #[arg(long)]
        strict: bool,
        /// Per-step spike words in hex.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write weight ROM images here.
        #[arg(long)]
        rom_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Accuracy against fractional weight bits.
    Quant {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        frac_bits: Option<Vec<u32>>,
        #[arg(long)]
        int_bits: Option<u32>,
        /// Drop low bits instead of rounding.
        #[arg(long)]
        trunc: bool,
        #[arg(long, value_delimiter = ',')]
        paths: Option<Vec<String>>,
        #[command(flatten)]
        spikes: SpikeArgs,
    },
    /// Median accuracy against Gaussian weight variation.
    Variation {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
        /// Add noise in weight units instead of scaling each weight.
        #[arg(long)]
        additive: bool,
        #[arg(long, value_delimiter = ',')]
        paths: Option<Vec<String>>,
        #[command(flatten)]
        spikes: SpikeArgs,
    },
}

#[derive(Subcommand)]
enum EnergyCmd {
    /// Energy per inference for each tabulated spiking processor.
    Report {
        #[arg(long)]
        nspk: u64,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReproArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Total windows (split evenly between classes).
    #[arg(long)]
    total: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    Ok(cfg)
}

fn apply_total(cfg: &mut RunConfig, total: Option<usize>) {
    if let Some(t) = total {
        cfg.corpus.per_class = [t / 2, t - t / 2];
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn model_path(cfg: &RunConfig, given: &Option<PathBuf>) -> Result<PathBuf> {
    given.clone().or_else(|| cfg.paths.model.clone()).context("no model given (use --model or paths.model)")
}

fn select<'a>(data: &'a FeatureSplit, split: &str) -> Result<Vec<&'a FeatureRow>> {
    let rows: Vec<&FeatureRow> = match split {
        "train" => data.train.iter().collect(),
        "validation" => data.validation.iter().collect(),
        "test" => data.test.iter().collect(),
        "all" => data.parts().into_iter().flat_map(|(_, p)| p.iter()).collect(),
        s => bail!("unknown split {s:?}; expected train, validation, test or all"),
    };
    if rows.is_empty() {
        bail!("split {split:?} is empty");
    }
    Ok(rows)
}

struct Loaded {
    model: MlpModelF64,
    rows: Vec<FeatureRow>,
}

fn load(cfg: &RunConfig, d: &DataArgs) -> Result<Loaded> {
    let mp = model_path(cfg, &d.model)?;
    let model = read_model::<f64>(&mp).with_context(|| format!("reading model {}", mp.display()))?;
    let data = read_features_csv(&d.features).with_context(|| format!("reading {}", d.features.display()))?;
    let rows = select(&data, &d.split)?.into_iter().cloned().collect::<Vec<_>>();
    if rows[0].fv.len() != model.n_inputs() {
        bail!("feature width {} does not match model input {}", rows[0].fv.len(), model.n_inputs());
    }
    Ok(Loaded { model, rows })
}

fn snn_config(cfg: &RunConfig, s: &SpikeArgs) -> SnnConfig {
    let mut c = cfg.snn_config();
    if let Some(v) = s.r_max_hz {
        c.r_max_hz = v;
    }
    if let Some(v) = s.vt {
        c.v_t = v;
    }
    if let Some(v) = s.steps {
        c.n_steps = v;
    }
    if let Some(v) = s.seed {
        c.seed = v;
    }
    c
}

fn parse_paths(given: &Option<Vec<String>>, cfg: &RunConfig) -> Result<Vec<InferencePath>> {
    match given {
        Some(v) => v.iter().map(|s| s.parse::<InferencePath>().map_err(Into::into)).collect(),
        None => Ok(cfg.sweep.paths.clone()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Corpus(CorpusCmd::Synth { out, total, seed }) => {
            apply_total(&mut cfg, total);
            cfg.seed = seed.unwrap_or(cfg.seed);
            let cfg = cfg.resolved();
            let labels = write_synth_corpus::<f32>(&cfg.corpus, &out)?;
            println!("{}", labels.display());
        }
        Command::Corpus(CorpusCmd::Import { manifest, out, seed }) => {
            let f = &cfg.features;
            let data = import_features(&manifest, f.fs_hz, f.window_s, f.d_max, f.s_max, seed.unwrap_or(cfg.seed))?;
            write_features_csv(&out, &data)?;
            for n in &data.notes {
                eprintln!("note: {n}");
            }
            println!("{} windows -> {}", data.len(), out.display());
        }
        Command::Features(FeaturesCmd::Extract { corpus, synth, out, total, seed, d_max, s_max }) => {
            apply_total(&mut cfg, total);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.features.d_max = d_max.unwrap_or(cfg.features.d_max);
            cfg.features.s_max = s_max.unwrap_or(cfg.features.s_max);
            let cfg = cfg.resolved();
            let f = &cfg.features;
            let data = match (corpus.or(cfg.paths.corpus_dir.clone()), synth) {
                (_, true) => synth_features::<f32>(&cfg.corpus, f.d_max, f.s_max)?,
                (Some(dir), false) => {
                    import_features(&dir.join("labels.csv"), f.fs_hz, f.window_s, f.d_max, f.s_max, cfg.seed)?
                }
                (None, false) => bail!("give --corpus DIR or --synth"),
            };
            write_features_csv(&out, &data)?;
            println!("{} windows -> {}", data.len(), out.display());
        }
        Command::Train(a) => {
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            let mut cfg = cfg.resolved();
            if let Some(e) = a.max_epochs {
                cfg.train.max_epochs = e;
            }
            let data = read_features_csv(&a.features)?;
            let (tr, va) = (to_samples::<f64>(&data.train), to_samples::<f64>(&data.validation));
            if tr.is_empty() || va.is_empty() {
                bail!("feature table needs non-empty train and validation splits");
            }
            let dims = [tr[0].x.len(), 80, 2];
            let outcome = train(&dims, &tr, &va, &cfg.train)?;
            let out = a.out.or(cfg.paths.model.clone()).unwrap_or_else(|| cfg.paths.out_dir.join("model.txt"));
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_model(&out, &outcome.model)?;
            if let Some(c) = a.curve {
                let mut s = String::from("epoch,train_loss,train_accuracy,val_accuracy\n");
                for r in &outcome.curve {
                    s.push_str(&format!(
                        "{},{:.6},{:.6},{:.6}\n",
                        r.epoch, r.train_loss, r.train_accuracy, r.val_accuracy
                    ));
                }
                std::fs::write(c, s)?;
            }
            println!(
                "best epoch {} validation accuracy {:.4} -> {}",
                outcome.best_epoch,
                outcome.best_val_accuracy,
                out.display()
            );
        }
        Command::Eval(a) => {
            let l = load(&cfg, &a.data)?;
            let samples = to_samples::<f64>(&l.rows);
            let snn = snn_config(&cfg, &a.spikes);
            let acc = match a.path.as_str() {
                "ann" => evaluate(&l.model, &samples)?,
                "snn" => evaluate_snn(&l.model, &samples, &snn)?,
                "hw" => {
                    let q = quantize_model(&l.model, HW_FORMAT, Rounding::Nearest);
                    let hw = HwConfig {
                        n_steps: snn.n_steps,
                        v_t: snn.v_t,
                        seed: snn.seed,
                        comparator: cfg.hw.comparator,
                        ..HwConfig::default()
                    };
                    let mut correct = 0;
                    for (k, r) in l.rows.iter().enumerate() {
                        let c = HwConfig { seed: tespar_snn::snn::sample_seed(hw.seed, k), ..hw.clone() };
                        correct += (hw_run(&r.fv, &q, &c)?.stats.predicted == r.meta.label) as usize;
                    }
                    correct as f64 / l.rows.len() as f64
                }
                p => bail!("unknown path {p:?}; expected ann, snn or hw"),
            };
            println!(
                "{{\"path\":\"{}\",\"split\":\"{}\",\"n\":{},\"accuracy\":{acc}}}",
                a.path,
                a.data.split,
                l.rows.len()
            );
        }
        Command::Snn(SnnCmd::Run { data, index, spikes, stats }) => {
            let l = load(&cfg, &data)?;
            let row = l.rows.get(index).with_context(|| format!("index {index} beyond {} windows", l.rows.len()))?;
            let st = run_snn(&l.model, &row.fv, &snn_config(&cfg, &spikes))?;
            let sum = spike_stats(&st);
            println!(
                "label {} predicted {} low_confidence {} spikes {:?} total {} output {:?}",
                row.meta.label, st.predicted, st.low_confidence, sum.totals, sum.grand_total, st.output_counts
            );
            if let Some(p) = stats {
                std::fs::write(p, serde_json::to_string_pretty(&st)?)?;
            }
        }
        Command::Snn(SnnCmd::Sweep { data, out, r_grid, vt_grid, spikes }) => {
            let l = load(&cfg, &data)?;
            let samples = to_samples::<f64>(&l.rows);
            let g = sweep_rv(
                &l.model,
                &samples,
                &r_grid.unwrap_or(cfg.snn.r_grid.clone()),
                &vt_grid.unwrap_or(cfg.snn.vt_grid.clone()),
                &snn_config(&cfg, &spikes),
            )?;
            emit(&out, &g.to_csv())?;
        }
        Command::Hwsim(HwCmd::Run { data, index, spikes, strict, trace, rom_dir }) => {
            let l = load(&cfg, &data)?;
            let row = l.rows.get(index).with_context(|| format!("index {index} beyond {} windows", l.rows.len()))?;
            let snn = snn_config(&cfg, &spikes);
            let q = quantize_model(&l.model, HW_FORMAT, Rounding::Nearest);
            let hw = HwConfig {
                n_steps: snn.n_steps,
                v_t: snn.v_t,
                comparator: if strict { Comparator::Greater } else { cfg.hw.comparator },
                seed: snn.seed,
                lane_seeds: None,
                record_trace: trace.is_some(),
            };
            let r = hw_run(&row.fv, &q, &hw)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "label {} predicted {} spikes {:?} output {:?}",
                row.meta.label, r.stats.predicted, r.stats.spikes_per_layer, r.stats.output_counts
            );
            if let Some(p) = trace {
                std::fs::write(p, trace_hex(&r.trace))?;
            }
            if let Some(dir) = rom_dir {
                std::fs::create_dir_all(&dir)?;
                for (k, layer) in q.layers().iter().enumerate() {
                    std::fs::write(
                        dir.join(format!("rom_layer{}.hex", k + 1)),
                        WeightRom::from_layer(layer, HW_FORMAT)?.to_hex(),
                    )?;
                }
            }
        }
        Command::Sweep(SweepCmd::Quant { data, out, frac_bits, int_bits, trunc, paths, spikes }) => {
            let l = load(&cfg, &data)?;
            let samples = to_samples::<f64>(&l.rows);
            let rows = quant_sweep(
                &l.model,
                &samples,
                int_bits.unwrap_or(cfg.sweep.int_bits),
                &frac_bits.unwrap_or(cfg.sweep.frac_bits.clone()),
                if trunc { Rounding::Truncate } else { cfg.sweep.rounding },
                &parse_paths(&paths, &cfg)?,
                &snn_config(&cfg, &spikes),
            )?;
            emit(&out, &quant_csv(&rows))?;
        }
        Command::Sweep(SweepCmd::Variation { data, out, sigmas, trials, additive, paths, spikes }) => {
            let l = load(&cfg, &data)?;
            let samples = to_samples::<f64>(&l.rows);
            let spec = PerturbSpec {
                sigma_pct: 0.0,
                n_trials: trials.unwrap_or(cfg.sweep.n_trials),
                seed: spikes.seed.unwrap_or(cfg.seed),
                mode: if additive { PerturbMode::Additive } else { cfg.sweep.perturb_mode },
            };
            let rows = robustness_sweep(
                &l.model,
                &samples,
                &sigmas.unwrap_or(cfg.sweep.sigmas_pct.clone()),
                &spec,
                &parse_paths(&paths, &cfg)?,
                &snn_config(&cfg, &spikes),
            )?;
            emit(&out, &variation_csv(&rows))?;
        }
        Command::Energy(EnergyCmd::Report { nspk, table, out }) => {
            let t = match table.or(cfg.energy.table.clone()) {
                Some(p) => EnergyTable::load(&p).with_context(|| format!("reading {}", p.display()))?,
                None => EnergyTable::default(),
            };
            emit(&out, &energy_csv(&energy_estimate(nspk, &t)))?;
        }
        Command::Repro(a) => {
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            apply_total(&mut cfg, a.total);
            let out = a.out.unwrap_or(cfg.paths.out_dir.clone());
            let s = repro(&cfg, &out)?;
            println!(
                "ann {:.4} snn {:.4} (v_t {}) hw {} -> {}",
                s.ann_test_accuracy,
                s.snn_test_accuracy,
                s.snn_v_t,
                s.hw_test_accuracy.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
                Path::new(&out).join("manifest.json").display()
            );
        }
    }
    Ok(())
}

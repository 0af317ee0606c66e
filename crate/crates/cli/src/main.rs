use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use fmnd::bench::{build_suite, parse_cases, run_bench, BenchSettings, SuiteSpec};
use fmnd::demo::{strip_leading_eq, DemoBundle, SEP};
use fmnd::dss::load_dss;
use fmnd::localize::{format_edits, InjectOp, Localizer, SurprisalLocalizer};
use fmnd::rank::{rank, Balance, RankerModel, TrainOptions};
use fmnd::search::{Engine, SearchConfig};

#[derive(Parser)]
#[command(name = "fmnd", version, about = "Grammar-driven repair of broken formulas")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Repair one formula (argument or stdin) and print ranked candidates.
    Repair {
        formula: Option<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        models: Models,
    },
    /// Run a case file and report top-k accuracy.
    Bench {
        cases: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        models: Models,
    },
    /// Train the naturalness ranker on a corpus.
    TrainRanker {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Weight examples equally instead of balancing classes.
        #[arg(long)]
        unbalanced: bool,
    },
    /// Train the surprisal localizer on a corpus.
    TrainLocalizer {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Write a case file of seeded synthetic errors over the corpus.
    Inject {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 60)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        max_errors: usize,
        /// Keep sampling until this many cases need edits outside the window.
        #[arg(long, default_value_t = 0)]
        min_beyond: usize,
        /// Comma separated subset of insert,delete,replace.
        #[arg(long, default_value = "insert,delete,replace")]
        ops: String,
        /// Append the original positions and ops of each edit.
        #[arg(long)]
        with_edits: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Grammar file; the bundled formula grammar when absent.
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// Rule tables; the bundled ones with the bundled grammar, none otherwise.
    #[arg(long)]
    dss: Option<PathBuf>,
    /// Training corpus; defaults to the bundled one with the bundled grammar.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Turn the domain rules off.
    #[arg(long)]
    no_dss: bool,
    /// Drop one leading `=` from inputs and corpus lines.
    #[arg(long)]
    strip_leading_eq: bool,
    /// Reliable tokens to backtrack over from an error.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Total edit cost allowed per candidate.
    #[arg(long, default_value_t = 3)]
    max_cost: u32,
    /// Edit cost allowed inside one repair window.
    #[arg(long, default_value_t = 3)]
    local_cost: u32,
    #[arg(long, default_value_t = 50)]
    max_candidates: usize,
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
    /// Seed for error injection.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Models {
    /// Saved ranker; trained from the corpus when absent.
    #[arg(long)]
    ranker: Option<PathBuf>,
    /// Saved localizer; trained from the corpus when absent.
    #[arg(long)]
    localizer: Option<PathBuf>,
    /// Keep the search order instead of ranking.
    #[arg(long)]
    no_ranker: bool,
    /// Never fall back to localizer-guided search.
    #[arg(long)]
    no_localizer: bool,
}

type Res<T> = Result<T, String>;

impl Common {
    /// Same as `bundle` but refuses an empty corpus.
    fn training_bundle(&self) -> Res<DemoBundle> {
        let b = self.bundle()?;
        if b.corpus.is_empty() {
            return Err("the corpus is empty".into());
        }
        Ok(b)
    }

    fn bundle(&self) -> Res<DemoBundle> {
        let mut b = match &self.grammar {
            None => DemoBundle::builtin(),
            Some(g) => DemoBundle::from_files(g, self.dss.as_deref(), None).map_err(|e| e.to_string())?,
        };
        if let (None, Some(d)) = (&self.grammar, &self.dss) {
            b.dss = load_dss(&read(d)?).map_err(|e| format!("{}: {e}", d.display()))?;
        }
        if let Some(c) = &self.corpus {
            b.corpus = read(c)?.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect();
        }
        if self.strip_leading_eq {
            b.corpus = b.corpus.iter().map(|l| strip_leading_eq(l).to_string()).collect();
        }
        Ok(b)
    }

    fn engine(&self, b: &DemoBundle) -> Res<Engine> {
        b.engine().map_err(|e| e.to_string())
    }

    fn config(&self) -> SearchConfig {
        SearchConfig {
            depth: self.depth,
            max_local_cost: self.local_cost,
            max_global_cost: self.max_cost,
            max_candidates: self.max_candidates,
            timeout: Duration::from_millis(self.timeout_ms),
            use_dss: !self.no_dss,
            ..SearchConfig::default()
        }
    }
}

impl Models {
    fn ranker(&self, b: &DemoBundle, e: &Engine) -> Res<Option<RankerModel>> {
        if self.no_ranker {
            return Ok(None);
        }
        if let Some(p) = &self.ranker {
            return RankerModel::from_text(&read(p)?).map(Some).map_err(|e| format!("{}: {e}", p.display()));
        }
        if b.corpus.is_empty() {
            return Ok(None);
        }
        Ok(Some(b.train_ranker(e, &TrainOptions::default()).map_err(|e| e.to_string())?.0))
    }

    fn localizer(&self, b: &DemoBundle, e: &Engine) -> Res<Option<SurprisalLocalizer>> {
        if self.no_localizer {
            return Ok(None);
        }
        if let Some(p) = &self.localizer {
            return SurprisalLocalizer::from_text(&read(p)?).map(Some).map_err(|e| format!("{}: {e}", p.display()));
        }
        if b.corpus.is_empty() {
            return Ok(None);
        }
        Ok(Some(b.train_localizer(e, 3).map_err(|e| e.to_string())?.0))
    }
}

fn read(p: &Path) -> Res<String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn write(p: &Path, s: &str) -> Res<()> {
    std::fs::write(p, s).map_err(|e| format!("{}: {e}", p.display()))
}

/// Exit 0 when something was produced, 1 when a repair found nothing.
fn run(cli: Cli) -> Res<u8> {
    match cli.cmd {
        Cmd::Repair { formula, common, models } => {
            let src = match formula {
                Some(f) if f != "-" => f,
                _ => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s).map_err(|e| e.to_string())?;
                    s.trim_end_matches(['\r', '\n']).to_string()
                }
            };
            let src = if common.strip_leading_eq { strip_leading_eq(&src).to_string() } else { src };
            let b = common.bundle()?;
            let e = common.engine(&b)?;
            let ranker = models.ranker(&b, &e)?;
            let loc = models.localizer(&b, &e)?;
            let toks = match e.tokenize(&src) {
                Ok(t) => t,
                Err(err) => {
                    eprintln!("fmnd: {err}");
                    return Ok(1);
                }
            };
            let out = e.repair_with_fallback(&toks, &common.config(), loc.as_ref().map(|l| l as &dyn Localizer));
            if out.timed_out {
                eprintln!("search stopped at the time limit");
            }
            let ranked = rank(&e.grammar, out.candidates, ranker.as_ref());
            let mut w = std::io::stdout().lock();
            for (i, c) in ranked.iter().enumerate() {
                let score = c.naturalness.map_or("-".to_string(), |s| format!("{:.4}", s + 0.0));
                // a closed pipe just ends the listing
                if writeln!(w, "{}\t{}\t{}\t{}", i + 1, c.cost, score, c.text).is_err() {
                    break;
                }
            }
            Ok(if ranked.is_empty() { 1 } else { 0 })
        }
        Cmd::Bench { cases, common, models } => {
            let b = common.bundle()?;
            let e = common.engine(&b)?;
            let ranker = models.ranker(&b, &e)?;
            let loc = models.localizer(&b, &e)?;
            let (cs, bad) = parse_cases(&read(&cases)?);
            for l in &bad {
                eprintln!("{}:{l}: skipped malformed case", cases.display());
            }
            let settings = BenchSettings {
                cfg: common.config(),
                ranker: ranker.as_ref(),
                localizer: loc.as_ref().map(|l| l as &dyn Localizer),
                strip_leading_eq: common.strip_leading_eq,
            };
            let mut report = run_bench(&e, &cs, &settings);
            report.malformed = bad.len();
            let mut w = std::io::stdout().lock();
            // a closed pipe just ends the output
            let _ = w.write_all(report.table().as_bytes()).and_then(|_| w.write_all(report.records().as_bytes()));
            eprint!("{}", report.timings());
            Ok(0)
        }
        Cmd::TrainRanker { common, out, k, alpha, unbalanced } => {
            let b = common.training_bundle()?;
            let e = common.engine(&b)?;
            let balance = if unbalanced { Balance::None } else { Balance::Uniform };
            let opts = TrainOptions { k, alpha, balance, ..TrainOptions::default() };
            let (m, skipped) = b.train_ranker(&e, &opts).map_err(|e| e.to_string())?;
            if skipped > 0 {
                eprintln!("skipped {skipped} corpus lines that are not well formed");
            }
            write(&out, &m.to_text())?;
            Ok(0)
        }
        Cmd::TrainLocalizer { common, out, k } => {
            let b = common.training_bundle()?;
            let e = common.engine(&b)?;
            let (m, skipped) = b.train_localizer(&e, k).map_err(|e| e.to_string())?;
            if skipped > 0 {
                eprintln!("skipped {skipped} corpus lines that are not well formed");
            }
            write(&out, &m.to_text())?;
            Ok(0)
        }
        Cmd::Inject { common, count, max_errors, min_beyond, ops, with_edits } => {
            let ops = ops
                .split(',')
                .map(|o| InjectOp::parse(o.trim()).ok_or_else(|| format!("unknown op {o:?}")))
                .collect::<Res<Vec<_>>>()?;
            let b = common.bundle()?;
            let e = common.engine(&b)?;
            let (corpus, skipped) = b.corpus_tokens(&e);
            if skipped > 0 {
                eprintln!("skipped {skipped} corpus lines that are not well formed");
            }
            if corpus.is_empty() {
                return Err("no usable formulas in the corpus".into());
            }
            let spec = SuiteSpec { count, max_errors, min_beyond, depth: common.depth, ops, seed: common.seed };
            let suite = build_suite(&e, &corpus, &spec);
            if suite.len() < count {
                eprintln!("only {} of {count} cases could be built", suite.len());
            }
            let mut w = std::io::stdout().lock();
            for (inj, tags) in &suite {
                let g = &e.grammar;
                let mut line = format!("{} {SEP} {} {SEP} {}", e.lexer.render(g, &inj.broken), e.lexer.render(g, &inj.original), tags.join(" "));
                if with_edits {
                    let (p, o) = format_edits(g, &inj.edits);
                    line.push_str(&format!(" {SEP} {p} {SEP} {o}"));
                }
                if writeln!(w, "{line}").is_err() {
                    break;
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(c) => ExitCode::from(c),
        Err(msg) => {
            eprintln!("fmnd: {msg}");
            ExitCode::from(2)
        }
    }
}

mod classify;
mod error;
mod inputs;
mod tag;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eeorder::classifiers::{train_tree, DecisionTree, TreeParams};
use eeorder::datasets::{component_overlap_analysis, Label};
use eeorder::embeddings::{train_skipgram, SkipGramParams};
use eeorder::features::{encode_all, FeatureSet, FeatureSpace};
use eeorder::fixtures::write_fixtures;
use eeorder::phonology::{load_inventory, parse_syllable, PhonemeInventory};
use eeorder::scales::{induce_scale_from_tree, rule_accuracy, search_best_scale, Scale, TiePolicy};

use crate::error::{CliError, CliResult, Stage};
use crate::inputs::{ListKind, Records};

#[derive(Debug, Parser)]
#[command(name = "eeorder", version, about = "Ordering models for elaborate expressions and coordinate compounds")]
struct Cli {
    /// Worker threads; 1 gives the single-worker mode.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split tokens into onset, rhyme and tone.
    Parse(ParseArgs),
    /// Run classification experiments and write a report.
    Classify(classify::ClassifyArgs),
    /// Search, induce or apply a scale.
    #[command(subcommand)]
    Scale(ScaleCmd),
    /// Sequence tagging: baseline cascade, window tagger, evaluation.
    #[command(subcommand)]
    Tag(tag::TagCmd),
    /// Train, export or query word embeddings.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Decision trees over pair features.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Count same-order and reversed occurrences of test pairs in training data.
    Overlap(OverlapArgs),
    /// Write the synthetic datasets.
    Fixtures(FixturesArgs),
}

#[derive(Debug, Args)]
struct ParseArgs {
    #[arg(long, default_value = "hmong")]
    lang: String,
    /// Inventory file used instead of the language's.
    #[arg(long)]
    inventory: Option<PathBuf>,
    #[arg(required = true)]
    tokens: Vec<String>,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, default_value = "hmong")]
    lang: String,
    /// Attested EE or CC list.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    kind: Option<ListKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum ScaleCmd {
    /// Best total order of the observed focal symbols on the data.
    Search {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scale read off a serialized decision tree.
    Induce {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value = "hmong")]
        lang: String,
        /// Feature set the tree was trained on; inferred from its width if omitted.
        #[arg(long)]
        features: Option<FeatureSet>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rule accuracy of a scale on the data.
    Apply {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        scale: PathBuf,
        #[arg(long, value_enum, default_value_t = TieArg::Half)]
        ties: TieArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TieArg {
    Half,
    Coin,
}

#[derive(Debug, Subcommand)]
enum EmbedCmd {
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 5)]
        min_count: usize,
        #[arg(long, default_value_t = 0.025)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        label: Option<String>,
    },
    /// Write a table as CSV (word, then one column per dimension).
    Export {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Neighbors {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

#[derive(Debug, Subcommand)]
enum TreeCmd {
    /// Fit a tree on all augmented pairs of a list.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "focal")]
        features: FeatureSet,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        #[arg(long, default_value_t = 5)]
        min_samples_leaf: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct OverlapArgs {
    #[arg(long, default_value = "hmong")]
    lang: String,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum)]
    kind: Option<ListKind>,
    /// CC list searched for B1 B2 bigrams.
    #[arg(long)]
    cc: Option<PathBuf>,
    /// Running text searched for B1 B2 bigrams.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Print one line per test pair.
    #[arg(long)]
    detail: bool,
}

#[derive(Debug, Args)]
struct FixturesArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Parse(a) => cmd_parse(a),
        Command::Classify(a) => classify::run(&a),
        Command::Scale(c) => cmd_scale(c),
        Command::Tag(c) => tag::run(c),
        Command::Embed(c) => cmd_embed(c),
        Command::Tree(c) => cmd_tree(c),
        Command::Overlap(a) => cmd_overlap(a),
        Command::Fixtures(a) => cmd_fixtures(a),
    }
}

fn cmd_parse(a: ParseArgs) -> CliResult<()> {
    let inv: PhonemeInventory = match &a.inventory {
        Some(p) => {
            inputs::existing("parse", p)?;
            load_inventory(p).invalid("parse")?
        }
        None => inputs::profile("parse", &a.lang)?.inventory,
    };
    for t in &a.tokens {
        match parse_syllable(&inv, t) {
            Ok(s) => println!("{t}\t{}\t{}\t{}", s.onset.symbol, s.rhyme.symbol, s.tone.symbol),
            Err(_) => println!("{t}\tNOPARSE"),
        }
    }
    Ok(())
}

fn load_data(stage: &'static str, d: &DataArgs) -> CliResult<(eeorder::phonology::LanguageProfile, Records)> {
    let profile = inputs::profile(stage, &d.lang)?;
    let records = inputs::records(stage, &d.data, d.kind, &profile)?;
    Ok((profile, records))
}

fn cmd_scale(c: ScaleCmd) -> CliResult<()> {
    match c {
        ScaleCmd::Search { data, out } => {
            let (profile, records) = load_data("scale/search", &data)?;
            let pairs = records.augmented(data.seed);
            let class = profile.focal.class();
            // observed symbols, in inventory order
            let observed: Vec<&str> = profile
                .inventory
                .class(class)
                .iter()
                .map(|p| p.symbol.as_str())
                .filter(|s| pairs.iter().any(|p| p.b1_syll.get(class).symbol == *s || p.b2_syll.get(class).symbol == *s))
                .collect();
            let (scale, acc) = search_best_scale(&pairs, &observed, class).invalid("scale/search")?;
            println!("{scale}");
            println!("train accuracy: {acc:.6}");
            if let Some(out) = out {
                scale.save(&out).failed("scale/search")?;
            }
            Ok(())
        }
        ScaleCmd::Induce { tree, lang, features, out } => {
            let stage = "scale/induce";
            inputs::existing(stage, &tree)?;
            let text = std::fs::read_to_string(&tree).invalid(stage)?;
            let model = DecisionTree::from_json(&text).invalid(stage)?;
            model.validate().invalid(stage)?;
            let profile = inputs::profile(stage, &lang)?;
            let space = match features {
                Some(f) => FeatureSpace::for_set(&profile, f, None),
                None => [FeatureSet::Focal, FeatureSet::All]
                    .into_iter()
                    .map(|f| FeatureSpace::for_set(&profile, f, None))
                    .find(|s| s.len() == model.n_features)
                    .ok_or_else(|| {
                        CliError::invalid(stage, format!("tree has {} features, matching no {lang} feature set", model.n_features))
                    })?,
            };
            let scale = induce_scale_from_tree(&model, &space, profile.focal.class()).invalid(stage)?;
            println!("{scale}");
            if let Some(out) = out {
                scale.save(&out).failed(stage)?;
            }
            Ok(())
        }
        ScaleCmd::Apply { data, scale, ties } => {
            let stage = "scale/apply";
            let (_, records) = load_data(stage, &data)?;
            let scale: Scale = inputs::scale(stage, &scale)?;
            let policy = match ties {
                TieArg::Half => TiePolicy::ExpectedHalf,
                TieArg::Coin => TiePolicy::RandomCoin(data.seed),
            };
            let pairs = records.augmented(data.seed);
            let acc = rule_accuracy(&scale, &pairs, policy).invalid(stage)?;
            println!("scale: {scale}");
            println!("examples: {}", pairs.len());
            println!("accuracy: {acc:.6}");
            Ok(())
        }
    }
}

fn cmd_embed(c: EmbedCmd) -> CliResult<()> {
    match c {
        EmbedCmd::Train { corpus, out, dim, window, negatives, epochs, min_count, learning_rate, seed, label } => {
            let stage = "embed/train";
            let corpus = inputs::corpus(stage, &corpus)?;
            let params = SkipGramParams { dim, window, negatives, epochs, min_count, seed, learning_rate, ..SkipGramParams::default() };
            let mut table = train_skipgram(&corpus, &params).failed(stage)?;
            if let Some(l) = label {
                table = table.with_label(l);
            }
            for (epoch, loss) in table.meta.loss_history.iter().enumerate() {
                eprintln!("epoch {epoch}: loss {loss:.6}");
            }
            table.save(&out).failed(stage)?;
            println!("{} words, dim {}", table.len(), table.dim());
            Ok(())
        }
        EmbedCmd::Export { emb, out } => {
            let table = inputs::embeddings("embed/export", &emb)?;
            table.export_csv(&out).failed("embed/export")
        }
        EmbedCmd::Neighbors { emb, word, k } => {
            let table = inputs::embeddings("embed/neighbors", &emb)?;
            for (w, cos) in table.neighbors(&word, k).invalid("embed/neighbors")? {
                println!("{w}\t{cos:.6}");
            }
            Ok(())
        }
    }
}

fn cmd_tree(c: TreeCmd) -> CliResult<()> {
    let TreeCmd::Train { data, features, max_depth, min_samples_leaf, out } = c;
    let stage = "tree/train";
    if features.uses_embeddings() {
        return Err(CliError::invalid(stage, "tree training takes phoneme feature sets only"));
    }
    let (profile, records) = load_data(stage, &data)?;
    let pairs = records.augmented(data.seed);
    let space = FeatureSpace::for_set(&profile, features, None);
    let (xs, ys): (Vec<_>, Vec<Label>) = encode_all(&pairs, &space, None).failed(stage)?;
    let params = TreeParams { max_depth, min_samples_leaf, ..TreeParams::default() };
    let tree = train_tree(&xs, &ys, &params).failed(stage)?;
    let correct = xs.iter().zip(&ys).filter(|(x, y)| tree.predict(x).ok() == Some(**y)).count();
    println!("{}", tree.render(Some(&space)));
    println!("depth {}, leaves {}, train accuracy {:.6}", tree.depth(), tree.n_leaves(), correct as f64 / xs.len() as f64);
    match induce_scale_from_tree(&tree, &space, profile.focal.class()) {
        Ok(s) => println!("induced scale: {s}"),
        Err(e) => eprintln!("no scale induced: {e}"),
    }
    if let Some(out) = out {
        inputs::write_text(stage, &out, &tree.to_json())?;
    }
    Ok(())
}

fn cmd_overlap(a: OverlapArgs) -> CliResult<()> {
    let stage = "overlap";
    let profile = inputs::profile(stage, &a.lang)?;
    let train = inputs::records(stage, &a.train, a.kind, &profile)?;
    let test = inputs::records(stage, &a.test, a.kind, &profile)?;
    let ccs = match &a.cc {
        Some(p) => match inputs::records(stage, p, Some(ListKind::Cc), &profile)? {
            Records::Cc(r) => Some(r),
            Records::Ee(_) => None,
        },
        None => None,
    };
    let corpus = a.corpus.as_deref().map(|p| inputs::corpus(stage, p)).transpose()?;
    let counts = match (&train, &test) {
        (Records::Ee(tr), Records::Ee(te)) => component_overlap_analysis(tr, te, ccs.as_deref(), corpus.as_ref()),
        (Records::Cc(tr), Records::Cc(te)) => component_overlap_analysis(tr, te, ccs.as_deref(), corpus.as_ref()),
        (Records::Ee(tr), Records::Cc(te)) => component_overlap_analysis(tr, te, ccs.as_deref(), corpus.as_ref()),
        (Records::Cc(tr), Records::Ee(te)) => component_overlap_analysis(tr, te, ccs.as_deref(), corpus.as_ref()),
    };
    if a.detail {
        println!("b1\tb2\tsame_ee\treversed_ee\tsame_cc\treversed_cc");
        for r in &counts.per_test {
            println!("{}\t{}\t{}\t{}\t{}\t{}", r.b1, r.b2, r.same_order_ee, r.reversed_ee, r.same_order_cc, r.reversed_cc);
        }
    }
    println!("EE same order: {}", counts.same_order_ee);
    println!("EE reversed: {}", counts.reversed_ee);
    println!("CC same order: {}", counts.same_order_cc);
    println!("CC reversed: {}", counts.reversed_cc);
    Ok(())
}

fn cmd_fixtures(a: FixturesArgs) -> CliResult<()> {
    for p in write_fixtures(&a.out, a.seed).failed("fixtures")? {
        println!("{}", p.display());
    }
    Ok(())
}

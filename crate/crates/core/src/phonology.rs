//! Syllable structure: phoneme inventories, longest-match parsing of
//! orthographic tokens into onset/rhyme/tone, and Middle Chinese tone
//! categories.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stored symbol of the zero tone (and the empty onset). Renders as "".
pub const ZERO: &str = "∅";

#[derive(Debug, Error)]
pub enum PhonologyError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("symbol {symbol:?} is listed as both {first:?} and {second:?}")]
    CrossClassDuplicate {
        symbol: String,
        first: PhonemeClass,
        second: PhonemeClass,
    },
    #[error("symbol {symbol:?} listed twice in {class:?}")]
    Duplicate { symbol: String, class: PhonemeClass },
    #[error("inventory has no {0:?} symbols")]
    EmptyClass(PhonemeClass),
    #[error("{0:?} is not a well-formed syllable")]
    NoParse(String),
    #[error("{class:?} phoneme {symbol:?} is not in the inventory")]
    UnknownPhoneme { symbol: String, class: PhonemeClass },
    #[error("unknown tone mark {mark:?} on open syllable {character:?}")]
    UnknownToneMark { character: String, mark: String },
    #[error("unknown language profile {0:?}")]
    UnknownLanguage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhonemeClass {
    Onset,
    Rhyme,
    Tone,
}

impl PhonemeClass {
    pub const ALL: [PhonemeClass; 3] = [PhonemeClass::Onset, PhonemeClass::Rhyme, PhonemeClass::Tone];

    pub fn name(self) -> &'static str {
        match self {
            PhonemeClass::Onset => "onset",
            PhonemeClass::Rhyme => "rhyme",
            PhonemeClass::Tone => "tone",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phoneme {
    pub class: PhonemeClass,
    pub symbol: String,
}

impl Phoneme {
    pub fn new(class: PhonemeClass, symbol: impl Into<String>) -> Self {
        Phoneme { class, symbol: symbol.into() }
    }

    pub fn zero(class: PhonemeClass) -> Self {
        Phoneme::new(class, ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.symbol == ZERO
    }

    /// Orthographic form: the zero sentinel renders empty.
    pub fn written(&self) -> &str {
        if self.is_zero() {
            ""
        } else {
            &self.symbol
        }
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol)
    }
}

/// Normalizes the file spellings of the zero sentinel ("0", "∅") to [`ZERO`].
pub fn normalize_symbol(raw: &str) -> &str {
    match raw {
        "0" | ZERO | "" => ZERO,
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syllable {
    pub onset: Phoneme,
    pub rhyme: Phoneme,
    pub tone: Phoneme,
}

impl Syllable {
    pub fn new(onset: &str, rhyme: &str, tone: &str) -> Self {
        Syllable {
            onset: Phoneme::new(PhonemeClass::Onset, normalize_symbol(onset)),
            rhyme: Phoneme::new(PhonemeClass::Rhyme, rhyme),
            tone: Phoneme::new(PhonemeClass::Tone, normalize_symbol(tone)),
        }
    }

    pub fn get(&self, class: PhonemeClass) -> &Phoneme {
        match class {
            PhonemeClass::Onset => &self.onset,
            PhonemeClass::Rhyme => &self.rhyme,
            PhonemeClass::Tone => &self.tone,
        }
    }
}

impl fmt::Display for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.onset.written(), self.rhyme.written(), self.tone.written())
    }
}

/// Onsets, rhymes and tones of one language.
///
/// Each class is kept sorted by descending symbol length (ties in file
/// order) so that the parser can try candidates longest first. The empty
/// onset and the zero tone are ordinary members carrying the [`ZERO`]
/// symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhonemeInventory {
    pub language: String,
    pub onsets: Vec<Phoneme>,
    pub rhymes: Vec<Phoneme>,
    pub tones: Vec<Phoneme>,
    pub allow_empty_onset: bool,
}

impl PhonemeInventory {
    /// Builds an inventory from symbol lists, validating uniqueness.
    ///
    /// A symbol may not be both an onset and a rhyme, nor both a rhyme and a
    /// tone, since either overlap makes the split point ambiguous. Onset and
    /// tone letters do overlap in practice (Hmong "m", "v", "s", "d") and are
    /// allowed.
    pub fn from_symbols(
        language: &str,
        onsets: &[&str],
        rhymes: &[&str],
        tones: &[&str],
    ) -> Result<Self, PhonologyError> {
        let build = |class: PhonemeClass, syms: &[&str]| -> Result<Vec<Phoneme>, PhonologyError> {
            if syms.is_empty() {
                return Err(PhonologyError::EmptyClass(class));
            }
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(syms.len());
            for raw in syms {
                let sym = match class {
                    PhonemeClass::Rhyme => *raw,
                    _ => normalize_symbol(raw),
                };
                if !seen.insert(sym.to_string()) {
                    return Err(PhonologyError::Duplicate { symbol: sym.to_string(), class });
                }
                out.push(Phoneme::new(class, sym));
            }
            // stable: equal lengths keep file order
            out.sort_by_key(|p| std::cmp::Reverse(p.written().chars().count()));
            Ok(out)
        };
        let onsets = build(PhonemeClass::Onset, onsets)?;
        let rhymes = build(PhonemeClass::Rhyme, rhymes)?;
        let tones = build(PhonemeClass::Tone, tones)?;

        let rhyme_set: HashSet<&str> = rhymes.iter().map(|p| p.symbol.as_str()).collect();
        for (others, class) in [(&onsets, PhonemeClass::Onset), (&tones, PhonemeClass::Tone)] {
            if let Some(p) = others.iter().find(|p| !p.is_zero() && rhyme_set.contains(p.symbol.as_str())) {
                return Err(PhonologyError::CrossClassDuplicate {
                    symbol: p.symbol.clone(),
                    first: class,
                    second: PhonemeClass::Rhyme,
                });
            }
        }
        if rhymes.iter().any(|p| p.is_zero()) {
            return Err(PhonologyError::Malformed { line: 0, msg: "the zero symbol cannot be a rhyme".into() });
        }
        let allow_empty_onset = onsets.iter().any(|p| p.is_zero());
        if !tones.iter().any(|p| p.is_zero()) {
            log::debug!("{language}: no zero tone; every syllable must carry a tone mark");
        }
        Ok(PhonemeInventory {
            language: language.to_string(),
            onsets,
            rhymes,
            tones,
            allow_empty_onset,
        })
    }

    /// Parses the sectioned text format (`[onsets]`, `[rhymes]`, `[tones]`,
    /// one symbol per line, `#` comments, `0` for the zero symbol).
    pub fn parse(language: &str, text: &str) -> Result<Self, PhonologyError> {
        let mut sections: HashMap<PhonemeClass, Vec<&str>> = HashMap::new();
        let mut current: Option<PhonemeClass> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                let class = match line {
                    "[onsets]" => PhonemeClass::Onset,
                    "[rhymes]" => PhonemeClass::Rhyme,
                    "[tones]" => PhonemeClass::Tone,
                    _ => {
                        return Err(PhonologyError::Malformed {
                            line: i + 1,
                            msg: format!("unknown section header {line:?}"),
                        })
                    }
                };
                if sections.contains_key(&class) {
                    return Err(PhonologyError::Malformed {
                        line: i + 1,
                        msg: format!("section {line} repeated"),
                    });
                }
                sections.insert(class, Vec::new());
                current = Some(class);
                continue;
            }
            match current {
                Some(class) => sections.get_mut(&class).expect("section opened").push(line),
                None => {
                    return Err(PhonologyError::Malformed {
                        line: i + 1,
                        msg: "symbol before any section header".into(),
                    })
                }
            }
        }
        let take = |class| sections.get(&class).cloned().ok_or(PhonologyError::EmptyClass(class));
        let onsets = take(PhonemeClass::Onset)?;
        let rhymes = take(PhonemeClass::Rhyme)?;
        let tones = take(PhonemeClass::Tone)?;
        Self::from_symbols(language, &onsets, &rhymes, &tones)
    }

    pub fn class(&self, class: PhonemeClass) -> &[Phoneme] {
        match class {
            PhonemeClass::Onset => &self.onsets,
            PhonemeClass::Rhyme => &self.rhymes,
            PhonemeClass::Tone => &self.tones,
        }
    }

    pub fn contains(&self, p: &Phoneme) -> bool {
        self.class(p.class).iter().any(|q| q.symbol == p.symbol)
    }

    /// Validates a syllable whose constituents came from elsewhere
    /// (pre-segmented columns).
    pub fn check(&self, s: &Syllable) -> Result<(), PhonologyError> {
        for p in [&s.onset, &s.rhyme, &s.tone] {
            if !self.contains(p) {
                return Err(PhonologyError::UnknownPhoneme { symbol: p.symbol.clone(), class: p.class });
            }
        }
        Ok(())
    }

    /// Sizes as (onsets, rhymes, tones).
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.onsets.len(), self.rhymes.len(), self.tones.len())
    }
}

pub fn load_inventory(path: impl AsRef<Path>) -> Result<PhonemeInventory, PhonologyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PhonologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let language = path.file_stem().and_then(|s| s.to_str()).unwrap_or("unknown");
    PhonemeInventory::parse(language, &text)
}

/// Splits `token` into onset, rhyme and tone.
///
/// Onsets are tried longest first (the empty onset last); for each onset
/// the rhymes are tried longest first, and the remainder must be either
/// empty (zero tone) or exactly one tone symbol. The first success wins, so
/// the result is unique for a given inventory.
pub fn parse_syllable(inv: &PhonemeInventory, token: &str) -> Result<Syllable, PhonologyError> {
    let no_parse = || PhonologyError::NoParse(token.to_string());
    if token.is_empty() || token.chars().any(char::is_whitespace) {
        return Err(no_parse());
    }
    let zero_tone = inv.tones.iter().find(|t| t.is_zero());
    for onset in &inv.onsets {
        let Some(rest) = token.strip_prefix(onset.written()) else { continue };
        for rhyme in &inv.rhymes {
            let Some(tail) = rest.strip_prefix(rhyme.written()) else { continue };
            let tone = if tail.is_empty() {
                zero_tone
            } else {
                inv.tones.iter().find(|t| !t.is_zero() && t.symbol == tail)
            };
            if let Some(tone) = tone {
                return Ok(Syllable { onset: onset.clone(), rhyme: rhyme.clone(), tone: tone.clone() });
            }
        }
    }
    Err(no_parse())
}

pub fn render_syllable(inv: &PhonemeInventory, s: &Syllable) -> Result<String, PhonologyError> {
    inv.check(s)?;
    Ok(s.to_string())
}

/// The syllable constituent that governs ordering in a language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Focal {
    Tone,
    Rhyme,
}

impl Focal {
    pub fn class(self) -> PhonemeClass {
        match self {
            Focal::Tone => PhonemeClass::Tone,
            Focal::Rhyme => PhonemeClass::Rhyme,
        }
    }
}

impl std::str::FromStr for Focal {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tone" => Ok(Focal::Tone),
            "rhyme" | "vowel" => Ok(Focal::Rhyme),
            other => Err(format!("unknown focal constituent {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub language: String,
    pub inventory: PhonemeInventory,
    pub focal: Focal,
    /// Tones are Middle Chinese categories derived from readings.
    pub mc_mode: bool,
}

pub const BUILTIN_LANGUAGES: [&str; 4] = ["hmong", "lahu", "mandarin", "middle-chinese"];

const HMONG_INV: &str = include_str!("../../../data/hmong.inv");
const LAHU_INV: &str = include_str!("../../../data/lahu.inv");
const MANDARIN_INV: &str = include_str!("../../../data/mandarin.inv");
const MC_SAMPLE: &str = include_str!("../../../data/middle_chinese_sample.tsv");

fn canonical_language(lang: &str) -> Result<&'static str, PhonologyError> {
    match lang.to_ascii_lowercase().replace('_', "-").as_str() {
        "hmong" | "hmn" => Ok("hmong"),
        "lahu" | "lhu" => Ok("lahu"),
        "mandarin" | "cmn" => Ok("mandarin"),
        "middle-chinese" | "mc" | "ltc" => Ok("middle-chinese"),
        _ => Err(PhonologyError::UnknownLanguage(lang.to_string())),
    }
}

fn focal_for(lang: &str) -> Focal {
    if lang == "lahu" {
        Focal::Rhyme
    } else {
        Focal::Tone
    }
}

impl LanguageProfile {
    /// Profile backed by the inventories compiled into the library.
    pub fn builtin(lang: &str) -> Result<Self, PhonologyError> {
        let lang = canonical_language(lang)?;
        if lang == "middle-chinese" {
            let readings = parse_mc_readings(MC_SAMPLE)?;
            return Ok(Self::middle_chinese(&readings));
        }
        let text = match lang {
            "hmong" => HMONG_INV,
            "lahu" => LAHU_INV,
            _ => MANDARIN_INV,
        };
        let inventory = PhonemeInventory::parse(lang, text)?;
        Ok(LanguageProfile { language: lang.to_string(), inventory, focal: focal_for(lang), mc_mode: false })
    }

    /// Profile loaded from `<dir>/<lang>.inv` (or, for Middle Chinese,
    /// `<dir>/middle_chinese.tsv` readings).
    pub fn from_dir(lang: &str, dir: &Path) -> Result<Self, PhonologyError> {
        let lang = canonical_language(lang)?;
        if lang == "middle-chinese" {
            let path = dir.join("middle_chinese.tsv");
            let path = if path.exists() { path } else { dir.join("middle_chinese_sample.tsv") };
            let readings = load_mc_readings(&path)?;
            return Ok(Self::middle_chinese(&readings));
        }
        let mut inventory = load_inventory(dir.join(format!("{lang}.inv")))?;
        inventory.language = lang.to_string();
        Ok(LanguageProfile { language: lang.to_string(), inventory, focal: focal_for(lang), mc_mode: false })
    }

    /// Uses `$EEORDER_DATA` when set, the compiled-in data otherwise.
    pub fn resolve(lang: &str) -> Result<Self, PhonologyError> {
        match std::env::var_os("EEORDER_DATA") {
            Some(dir) => Self::from_dir(lang, Path::new(&dir)),
            None => Self::builtin(lang),
        }
    }

    /// Middle Chinese profile whose onsets and finals (rhyme + coda) are
    /// collected from a readings table; tones are the four categories.
    pub fn middle_chinese(readings: &HashMap<String, McReading>) -> Self {
        let mut onsets: Vec<String> = Vec::new();
        let mut rhymes: Vec<String> = Vec::new();
        let mut sorted: Vec<&McReading> = readings.values().collect();
        sorted.sort_by(|a, b| a.character.cmp(&b.character));
        for r in sorted {
            let on = normalize_symbol(&r.onset).to_string();
            if !onsets.contains(&on) {
                onsets.push(on);
            }
            let fin = r.final_symbol();
            if !rhymes.contains(&fin) {
                rhymes.push(fin);
            }
        }
        let mut inventory = PhonemeInventory {
            language: "middle-chinese".into(),
            onsets: onsets.iter().map(|s| Phoneme::new(PhonemeClass::Onset, s.as_str())).collect(),
            rhymes: rhymes.iter().map(|s| Phoneme::new(PhonemeClass::Rhyme, s.as_str())).collect(),
            tones: McTone::ALL.iter().map(|t| Phoneme::new(PhonemeClass::Tone, t.name())).collect(),
            allow_empty_onset: onsets.iter().any(|s| s == ZERO),
        };
        inventory.onsets.sort_by_key(|p| std::cmp::Reverse(p.written().chars().count()));
        inventory.rhymes.sort_by_key(|p| std::cmp::Reverse(p.written().chars().count()));
        LanguageProfile { language: "middle-chinese".into(), inventory, focal: Focal::Tone, mc_mode: true }
    }
}

pub fn focal_phoneme<'a>(profile: &LanguageProfile, s: &'a Syllable) -> &'a Phoneme {
    s.get(profile.focal.class())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McTone {
    Ping,
    Shang,
    Qu,
    Ru,
}

impl McTone {
    pub const ALL: [McTone; 4] = [McTone::Ping, McTone::Shang, McTone::Qu, McTone::Ru];

    pub fn name(self) -> &'static str {
        match self {
            McTone::Ping => "ping",
            McTone::Shang => "shang",
            McTone::Qu => "qu",
            McTone::Ru => "ru",
        }
    }
}

/// One Middle Chinese reading as transcribed in the readings table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McReading {
    pub character: String,
    pub onset: String,
    pub rhyme: String,
    pub coda: String,
    pub tone_mark: String,
}

impl McReading {
    fn final_symbol(&self) -> String {
        format!("{}{}", self.rhyme, self.coda)
    }

    /// The reading as a syllable whose tone is the MC category.
    pub fn syllable(&self) -> Result<Syllable, PhonologyError> {
        let tone = mc_tone_category(self)?;
        Ok(Syllable {
            onset: Phoneme::new(PhonemeClass::Onset, normalize_symbol(&self.onset)),
            rhyme: Phoneme::new(PhonemeClass::Rhyme, self.final_symbol()),
            tone: Phoneme::new(PhonemeClass::Tone, tone.name()),
        })
    }
}

/// Stop codas make an entering-tone (ru) syllable whatever the mark;
/// otherwise the mark decides: none = ping, X = shang, H = qu.
pub fn mc_tone_category(reading: &McReading) -> Result<McTone, PhonologyError> {
    if matches!(reading.coda.trim(), "p" | "t" | "k") {
        return Ok(McTone::Ru);
    }
    match reading.tone_mark.trim() {
        "" | "0" | ZERO | "ping" | "level" => Ok(McTone::Ping),
        "X" | "x" | "shang" | "rising" => Ok(McTone::Shang),
        "H" | "h" | "qu" | "departing" => Ok(McTone::Qu),
        "ru" | "entering" => Ok(McTone::Ru),
        other => Err(PhonologyError::UnknownToneMark {
            character: reading.character.clone(),
            mark: other.to_string(),
        }),
    }
}

/// Parses the readings TSV (character, onset, rhyme, coda, tone_mark).
/// A header row starting with "character" is skipped.
pub fn parse_mc_readings(text: &str) -> Result<HashMap<String, McReading>, PhonologyError> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("character")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 {
            return Err(PhonologyError::Malformed {
                line: i + 1,
                msg: format!("expected 5 tab-separated columns, got {}", cols.len()),
            });
        }
        let get = |k: usize| cols.get(k).map(|s| s.trim().to_string()).unwrap_or_default();
        let reading = McReading {
            character: get(0),
            onset: get(1),
            rhyme: get(2),
            coda: get(3),
            tone_mark: get(4),
        };
        mc_tone_category(&reading)?;
        out.entry(reading.character.clone()).or_insert(reading);
    }
    Ok(out)
}

/// Readings from `$EEORDER_DATA/middle_chinese.tsv` when present, the
/// compiled-in sample otherwise.
pub fn resolve_mc_readings() -> Result<HashMap<String, McReading>, PhonologyError> {
    if let Some(dir) = std::env::var_os("EEORDER_DATA") {
        let dir = Path::new(&dir);
        for name in ["middle_chinese.tsv", "middle_chinese_sample.tsv"] {
            if dir.join(name).exists() {
                return load_mc_readings(dir.join(name));
            }
        }
    }
    parse_mc_readings(MC_SAMPLE)
}

pub fn load_mc_readings(path: impl AsRef<Path>) -> Result<HashMap<String, McReading>, PhonologyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PhonologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_mc_readings(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hmong() -> LanguageProfile {
        LanguageProfile::builtin("hmong").unwrap()
    }

    #[test]
    fn small_inventory_loads() {
        let text = "[onsets]\np\nnt\nl\nm\nts\nch\nd\nx\n[rhymes]\ne\nu\no\naw\n[tones]\nb\nm\nd\nj\nv\ns\ng\n0\n";
        let inv = PhonemeInventory::parse("toy", text).unwrap();
        assert_eq!(inv.sizes(), (8, 4, 8));
        assert!(inv.tones.iter().any(Phoneme::is_zero));
        assert!(!inv.allow_empty_onset);
    }

    #[test]
    fn missing_tones_section_is_rejected() {
        let text = "[onsets]\np\n[rhymes]\na\n";
        assert!(matches!(
            PhonemeInventory::parse("toy", text),
            Err(PhonologyError::EmptyClass(PhonemeClass::Tone))
        ));
    }

    #[test]
    fn bad_header_and_duplicates_are_rejected() {
        assert!(matches!(
            PhonemeInventory::parse("toy", "[codas]\nk\n"),
            Err(PhonologyError::Malformed { .. })
        ));
        assert!(matches!(
            PhonemeInventory::parse("toy", "[onsets]\np\np\n[rhymes]\na\n[tones]\n0\n"),
            Err(PhonologyError::Duplicate { .. })
        ));
        assert!(matches!(
            PhonemeInventory::parse("toy", "[onsets]\na\n[rhymes]\na\n[tones]\n0\n"),
            Err(PhonologyError::CrossClassDuplicate { .. })
        ));
    }

    #[test]
    fn hmong_inventory_sizes() {
        assert_eq!(hmong().inventory.sizes(), (58, 14, 8));
    }

    #[test]
    fn shipped_inventories_load() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
        for lang in BUILTIN_LANGUAGES {
            let from_dir = LanguageProfile::from_dir(lang, &dir).unwrap();
            assert_eq!(from_dir, LanguageProfile::builtin(lang).unwrap(), "{lang}");
        }
        assert_eq!(LanguageProfile::builtin("lahu").unwrap().inventory.rhymes.len(), 9);
    }

    #[test]
    fn parses_hmong_syllables() {
        let inv = hmong().inventory;
        assert_eq!(parse_syllable(&inv, "ntuj").unwrap(), Syllable::new("nt", "u", "j"));
        assert_eq!(parse_syllable(&inv, "lo").unwrap(), Syllable::new("l", "o", "0"));
        assert_eq!(parse_syllable(&inv, "ntxhais").unwrap(), Syllable::new("ntxh", "ai", "s"));
        assert_eq!(parse_syllable(&inv, "ib").unwrap(), Syllable::new("0", "i", "b"));
        assert!(matches!(parse_syllable(&inv, "xyz9"), Err(PhonologyError::NoParse(_))));
        assert!(parse_syllable(&inv, "").is_err());
        assert!(parse_syllable(&inv, "niam txiv").is_err());
        // two syllables in one token
        assert!(parse_syllable(&inv, "niamtxiv").is_err());
    }

    #[test]
    fn backtracks_to_shorter_onset() {
        // "n" + "ta" only parses if "nt" is abandoned
        let inv = PhonemeInventory::from_symbols("toy", &["n", "nt"], &["ta", "u"], &["0", "j"]).unwrap();
        assert_eq!(parse_syllable(&inv, "ntaj").unwrap(), Syllable::new("n", "ta", "j"));
        assert_eq!(parse_syllable(&inv, "ntuj").unwrap(), Syllable::new("nt", "u", "j"));
    }

    #[test]
    fn renders() {
        let inv = hmong().inventory;
        assert_eq!(render_syllable(&inv, &Syllable::new("nt", "u", "j")).unwrap(), "ntuj");
        assert_eq!(render_syllable(&inv, &Syllable::new("l", "o", "0")).unwrap(), "lo");
        assert!(render_syllable(&inv, &Syllable::new("zz", "o", "0")).is_err());
    }

    #[test]
    fn lahu_ascii_romanization() {
        let inv = LanguageProfile::builtin("lahu").unwrap().inventory;
        assert_eq!(parse_syllable(&inv, "pho^?").unwrap(), Syllable::new("ph", "o", "^?"));
        assert_eq!(parse_syllable(&inv, "di").unwrap(), Syllable::new("d", "i", "0"));
        assert_eq!(parse_syllable(&inv, "chɔ^").unwrap(), Syllable::new("ch", "ɔ", "^"));
    }

    #[test]
    fn focal_selection() {
        let s = Syllable::new("nt", "u", "j");
        assert_eq!(focal_phoneme(&hmong(), &s).symbol, "j");
        let lahu = LanguageProfile::builtin("lahu").unwrap();
        assert_eq!(focal_phoneme(&lahu, &Syllable::new("ph", "o", "^?")).symbol, "o");
        let cmn = LanguageProfile::builtin("mandarin").unwrap();
        let s = parse_syllable(&cmn.inventory, "tian1").unwrap();
        assert_eq!(focal_phoneme(&cmn, &s).symbol, "1");
        assert_eq!(focal_phoneme(&cmn, &s).class, PhonemeClass::Tone);
    }

    fn reading(coda: &str, mark: &str) -> McReading {
        McReading {
            character: "字".into(),
            onset: "k".into(),
            rhyme: "a".into(),
            coda: coda.into(),
            tone_mark: mark.into(),
        }
    }

    #[test]
    fn middle_chinese_categories() {
        for mark in ["", "X", "H"] {
            assert_eq!(mc_tone_category(&reading("k", mark)).unwrap(), McTone::Ru);
        }
        assert_eq!(mc_tone_category(&reading("", "")).unwrap(), McTone::Ping);
        assert_eq!(mc_tone_category(&reading("", "X")).unwrap(), McTone::Shang);
        assert_eq!(mc_tone_category(&reading("n", "H")).unwrap(), McTone::Qu);
        assert!(mc_tone_category(&reading("n", "Q")).is_err());
    }

    #[test]
    fn middle_chinese_profile_from_readings() {
        let mc = LanguageProfile::builtin("mc").unwrap();
        assert!(mc.mc_mode);
        assert_eq!(mc.inventory.tones.len(), 4);
        let readings = parse_mc_readings(MC_SAMPLE).unwrap();
        let s = readings["木"].syllable().unwrap();
        assert_eq!(s.tone.symbol, "ru");
        mc.inventory.check(&s).unwrap();
    }
}

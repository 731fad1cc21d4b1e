//! Data files found under a data directory, and name resolution for them.
//!
//! Layout: `spaces/*.space.json`, `rules/*.rules.json`,
//! `automata/*.automaton.json`. A name given on the command line may be a
//! path, a file stem inside the matching subdirectory, or an id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use fiqh_core::automaton::Automaton;
use fiqh_core::rulebase::RuleBase;
use fiqh_core::space::QuestionSpace;

pub const DEFAULT_DATA_DIR: &str = "data";

#[derive(Debug, Clone, Copy)]
enum Kind {
    Space,
    Rules,
    Automaton,
}

impl Kind {
    fn dir(self) -> &'static str {
        match self {
            Kind::Space => "spaces",
            Kind::Rules => "rules",
            Kind::Automaton => "automata",
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Kind::Space => ".space.json",
            Kind::Rules => ".rules.json",
            Kind::Automaton => ".automaton.json",
        }
    }
}

fn files(dir: &Path, kind: Kind) -> Result<Vec<PathBuf>> {
    let sub = dir.join(kind.dir());
    if !sub.is_dir() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(&sub)
        .with_context(|| format!("cannot list {}", sub.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(kind.suffix()))
        .collect();
    out.sort();
    Ok(out)
}

/// A path for `name`: as given, or inside the data directory with or
/// without the usual suffix.
fn locate(dir: &Path, kind: Kind, name: &str) -> Option<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Some(direct);
    }
    let sub = dir.join(kind.dir());
    [name.to_string(), format!("{name}.json"), format!("{name}{}", kind.suffix())]
        .into_iter()
        .map(|f| sub.join(f))
        .find(|p| p.is_file())
}

/// Everything in a data directory, loaded once.
pub struct Catalog {
    pub dir: PathBuf,
    pub spaces: BTreeMap<String, Arc<QuestionSpace>>,
    pub rulebases: BTreeMap<String, Arc<RuleBase>>,
    pub automata: BTreeMap<String, Arc<Automaton>>,
}

impl Catalog {
    pub fn load(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let mut spaces = BTreeMap::new();
        for path in files(&dir, Kind::Space)? {
            let space = QuestionSpace::load(&path)?;
            if spaces.insert(space.id().to_string(), Arc::new(space)).is_some() {
                bail!("{}: duplicate space id", path.display());
            }
        }
        let mut rulebases = BTreeMap::new();
        for path in files(&dir, Kind::Rules)? {
            let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            let space_id = RuleBase::space_of(&text).with_context(|| path.display().to_string())?;
            let space = spaces
                .get(&space_id)
                .ok_or_else(|| anyhow!("{}: unknown space `{space_id}`", path.display()))?;
            let rulebase = RuleBase::from_json(&text, space).with_context(|| path.display().to_string())?;
            let id = rulebase.id().to_string();
            if rulebases.insert(id, Arc::new(rulebase)).is_some() {
                bail!("{}: duplicate rulebase id", path.display());
            }
        }
        let mut automata = BTreeMap::new();
        for path in files(&dir, Kind::Automaton)? {
            let a = Automaton::load(&path)?;
            if automata.insert(a.id.clone(), Arc::new(a)).is_some() {
                bail!("{}: duplicate automaton id", path.display());
            }
        }
        Ok(Self { dir, spaces, rulebases, automata })
    }

    pub fn space(&self, name: &str) -> Option<&Arc<QuestionSpace>> {
        self.spaces.get(name)
    }

    pub fn automaton(&self, name: &str) -> Option<&Arc<Automaton>> {
        self.automata.get(name).or_else(|| self.automata.values().find(|a| a.answers_to(name)))
    }

    pub fn rulebases_for<'a>(&'a self, space: &'a str) -> impl Iterator<Item = &'a RuleBase> + 'a {
        self.rulebases.values().map(|rb| rb.as_ref()).filter(move |rb| rb.space_id() == space)
    }

    /// The rulebase to use for `space` when none was named: the only one
    /// there is.
    pub fn default_rulebase<'a>(&'a self, space: &'a str) -> Result<&'a RuleBase, Vec<String>> {
        let all: Vec<&RuleBase> = self.rulebases_for(space).collect();
        match all[..] {
            [only] => Ok(only),
            _ => Err(all.iter().map(|rb| rb.id().to_string()).collect()),
        }
    }
}

/// Loads a space by path, file stem or id.
pub fn load_space(dir: &Path, name: &str) -> Result<QuestionSpace> {
    if let Some(path) = locate(dir, Kind::Space, name) {
        return Ok(QuestionSpace::load(path)?);
    }
    for path in files(dir, Kind::Space)? {
        let space = QuestionSpace::load(&path)?;
        if space.id() == name {
            return Ok(space);
        }
    }
    bail!("no question space `{name}` (looked in {})", dir.join(Kind::Space.dir()).display())
}

/// Loads a rulebase by path, file stem or id, together with its space.
/// `space` overrides the space the rulebase file names.
pub fn load_rulebase(dir: &Path, name: &str, space: Option<&str>) -> Result<(RuleBase, QuestionSpace)> {
    let path = match locate(dir, Kind::Rules, name) {
        Some(p) => p,
        None => {
            let mut found = None;
            for path in files(dir, Kind::Rules)? {
                let text = std::fs::read_to_string(&path)?;
                if serde_json::from_str::<serde_json::Value>(&text)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|id| id.as_str().map(|s| s == name)))
                    .unwrap_or(false)
                {
                    found = Some(path);
                    break;
                }
            }
            found.ok_or_else(|| {
                anyhow!("no rulebase `{name}` (looked in {})", dir.join(Kind::Rules.dir()).display())
            })?
        }
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let space_name = match space {
        Some(s) => s.to_string(),
        None => RuleBase::space_of(&text).with_context(|| path.display().to_string())?,
    };
    let space = load_space(dir, &space_name)?;
    let rb = RuleBase::from_json(&text, &space).with_context(|| path.display().to_string())?;
    Ok((rb, space))
}

/// Loads an automaton by path, file stem, id or alias.
pub fn load_automaton(dir: &Path, name: &str) -> Result<Automaton> {
    if let Some(path) = locate(dir, Kind::Automaton, name) {
        return Ok(Automaton::load(path)?);
    }
    for path in files(dir, Kind::Automaton)? {
        let a = Automaton::load(&path)?;
        if a.answers_to(name) {
            return Ok(a);
        }
    }
    bail!("no automaton `{name}` (looked in {})", dir.join(Kind::Automaton.dir()).display())
}

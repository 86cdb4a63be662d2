//! Snowball stemmer for Spanish.
//!
//! Works on `char` vectors so accented input is handled, although the
//! preprocessing pipeline only ever feeds it accent-folded ASCII.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StemmerKind {
    #[default]
    SnowballSpanish,
    /// No stemming; tokens pass through unchanged.
    Identity,
}

impl StemmerKind {
    pub fn parse(id: &str) -> Option<Self> {
        match id {
            "snowball-spanish" | "spanish" | "snowball" => Some(Self::SnowballSpanish),
            "identity" | "none" => Some(Self::Identity),
            _ => None,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::SnowballSpanish => "snowball-spanish",
            Self::Identity => "identity",
        }
    }

    pub fn stem(self, word: &str) -> String {
        match self {
            Self::SnowballSpanish => stem(word),
            Self::Identity => word.to_string(),
        }
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'á' | 'é' | 'í' | 'ó' | 'ú' | 'ü')
}

const PRONOUNS: &[&str] = &[
    "me", "se", "sela", "selo", "selas", "selos", "la", "le", "lo", "las", "les", "los", "nos",
];

enum PronounBase {
    Deaccent(&'static str),
    Keep,
    AfterU,
}

const PRONOUN_BASES: &[(&str, PronounBase)] = &[
    ("iéndo", PronounBase::Deaccent("iendo")),
    ("ándo", PronounBase::Deaccent("ando")),
    ("ár", PronounBase::Deaccent("ar")),
    ("ér", PronounBase::Deaccent("er")),
    ("ír", PronounBase::Deaccent("ir")),
    ("ando", PronounBase::Keep),
    ("iendo", PronounBase::Keep),
    ("ar", PronounBase::Keep),
    ("er", PronounBase::Keep),
    ("ir", PronounBase::Keep),
    ("yendo", PronounBase::AfterU),
];

#[derive(Clone, Copy)]
enum Standard {
    Delete,
    DeleteIc,
    Log,
    U,
    Ente,
    Amente,
    Mente,
    Idad,
    Iv,
}

const STANDARD: &[(&str, Standard)] = &[
    ("anza", Standard::Delete),
    ("anzas", Standard::Delete),
    ("ico", Standard::Delete),
    ("ica", Standard::Delete),
    ("icos", Standard::Delete),
    ("icas", Standard::Delete),
    ("ismo", Standard::Delete),
    ("ismos", Standard::Delete),
    ("able", Standard::Delete),
    ("ables", Standard::Delete),
    ("ible", Standard::Delete),
    ("ibles", Standard::Delete),
    ("ista", Standard::Delete),
    ("istas", Standard::Delete),
    ("oso", Standard::Delete),
    ("osa", Standard::Delete),
    ("osos", Standard::Delete),
    ("osas", Standard::Delete),
    ("amiento", Standard::Delete),
    ("amientos", Standard::Delete),
    ("imiento", Standard::Delete),
    ("imientos", Standard::Delete),
    ("adora", Standard::DeleteIc),
    ("ador", Standard::DeleteIc),
    ("ación", Standard::DeleteIc),
    ("adoras", Standard::DeleteIc),
    ("adores", Standard::DeleteIc),
    ("aciones", Standard::DeleteIc),
    ("ante", Standard::DeleteIc),
    ("antes", Standard::DeleteIc),
    ("ancia", Standard::DeleteIc),
    ("ancias", Standard::DeleteIc),
    ("logía", Standard::Log),
    ("logías", Standard::Log),
    ("ución", Standard::U),
    ("uciones", Standard::U),
    ("encia", Standard::Ente),
    ("encias", Standard::Ente),
    ("amente", Standard::Amente),
    ("mente", Standard::Mente),
    ("idad", Standard::Idad),
    ("idades", Standard::Idad),
    ("iva", Standard::Iv),
    ("ivo", Standard::Iv),
    ("ivas", Standard::Iv),
    ("ivos", Standard::Iv),
];

const Y_VERB: &[&str] = &[
    "ya", "ye", "yan", "yen", "yeron", "yendo", "yo", "yó", "yas", "yes", "yais", "yamos",
];

/// Verb endings removed together with a preceding `u` when that `u` follows `g`.
const VERB_GU: &[&str] = &["en", "es", "éis", "emos"];

const VERB_OTHER: &[&str] = &[
    "arían", "arías", "arán", "arás", "aríais", "aría", "aréis", "aríamos", "aremos", "ará", "aré",
    "erían", "erías", "erán", "erás", "eríais", "ería", "eréis", "eríamos", "eremos", "erá", "eré",
    "irían", "irías", "irán", "irás", "iríais", "iría", "iréis", "iríamos", "iremos", "irá", "iré",
    "aba", "ada", "ida", "ía", "ara", "iera", "ad", "ed", "id", "ase", "iese", "aste", "iste", "an",
    "aban", "ían", "aran", "ieran", "asen", "iesen", "aron", "ieron", "ado", "ido", "ando", "iendo",
    "ió", "ar", "er", "ir", "as", "abas", "adas", "idas", "ías", "aras", "ieras", "ases", "ieses",
    "ís", "áis", "abais", "íais", "arais", "ierais", "aseis", "ieseis", "asteis", "isteis", "ados",
    "idos", "amos", "ábamos", "íamos", "imos", "áramos", "iéramos", "ásemos", "iésemos",
];

struct Word {
    w: Vec<char>,
    rv: usize,
    r1: usize,
    r2: usize,
}

impl Word {
    fn new(word: &str) -> Self {
        let w: Vec<char> = word.chars().collect();
        let n = w.len();
        let rv = region_v(&w);
        let r1 = region_after_vc(&w, 0).unwrap_or(n);
        let r2 = region_after_vc(&w, r1).unwrap_or(n);
        Self { w, rv, r1, r2 }
    }

    fn len(&self) -> usize {
        self.w.len()
    }

    fn ends_with(&self, suffix: &str) -> bool {
        let s: Vec<char> = suffix.chars().collect();
        s.len() <= self.w.len() && self.w[self.w.len() - s.len()..] == s[..]
    }

    /// Start index of `suffix` if the word ends with it.
    fn suffix_start(&self, suffix: &str) -> Option<usize> {
        self.ends_with(suffix).then(|| self.w.len() - suffix.chars().count())
    }

    /// Longest candidate the word ends with, optionally restricted to start at or after `limit`.
    fn longest<'a, T>(&self, table: &'a [(&'a str, T)], limit: usize) -> Option<(usize, &'a T)> {
        table
            .iter()
            .filter_map(|(s, t)| self.suffix_start(s).filter(|&p| p >= limit).map(|p| (p, t)))
            .min_by_key(|(p, _)| *p)
    }

    fn truncate(&mut self, at: usize) {
        self.w.truncate(at);
    }

    fn replace_from(&mut self, at: usize, with: &str) {
        self.w.truncate(at);
        self.w.extend(with.chars());
    }

    fn char_before(&self, at: usize) -> Option<char> {
        at.checked_sub(1).map(|i| self.w[i])
    }
}

fn region_v(w: &[char]) -> usize {
    let n = w.len();
    if n < 2 {
        return n;
    }
    let find_from = |start: usize, want_vowel: bool| (start..n).find(|&i| is_vowel(w[i]) == want_vowel);
    let pos = match (is_vowel(w[0]), is_vowel(w[1])) {
        (true, false) => find_from(2, true).map(|p| p + 1).or(Some(2)),
        (true, true) => find_from(2, false).map(|p| p + 1),
        (false, false) => find_from(2, true).map(|p| p + 1),
        (false, true) => (n >= 3).then_some(3),
    };
    pos.unwrap_or(n)
}

/// Region after the first non-vowel that follows a vowel, searching from `start`.
fn region_after_vc(w: &[char], start: usize) -> Option<usize> {
    let v = (start..w.len()).find(|&i| is_vowel(w[i]))?;
    let c = (v + 1..w.len()).find(|&i| !is_vowel(w[i]))?;
    Some(c + 1)
}

fn attached_pronoun(word: &mut Word) {
    let Some(pron_start) = PRONOUNS.iter().filter_map(|p| word.suffix_start(p)).min() else {
        return;
    };
    let base = Word { w: word.w[..pron_start].to_vec(), rv: word.rv, r1: word.r1, r2: word.r2 };
    let Some((start, kind)) = base.longest(PRONOUN_BASES, 0) else {
        return;
    };
    if start < word.rv {
        return;
    }
    match kind {
        PronounBase::Deaccent(plain) => word.replace_from(start, plain),
        PronounBase::Keep => word.truncate(pron_start),
        PronounBase::AfterU => {
            if word.char_before(start) == Some('u') {
                word.truncate(pron_start);
            }
        }
    }
}

/// Try one of `endings` (longest match) at or after region `limit` and delete it.
fn delete_optional(word: &mut Word, endings: &[&'static str], limit: usize) -> Option<&'static str> {
    let (start, ending) = endings
        .iter()
        .filter_map(|e| word.suffix_start(e).map(|p| (p, *e)))
        .min_by_key(|(p, _)| *p)?;
    if start < limit {
        return None;
    }
    word.truncate(start);
    Some(ending)
}

fn standard_suffix(word: &mut Word) -> bool {
    let Some((start, kind)) = word.longest(STANDARD, 0) else {
        return false;
    };
    let kind = *kind;
    let r1 = word.r1;
    let r2 = word.r2;
    match kind {
        Standard::Amente => {
            if start < r1 {
                return false;
            }
        }
        _ => {
            if start < r2 {
                return false;
            }
        }
    }
    match kind {
        Standard::Delete => word.truncate(start),
        Standard::DeleteIc => {
            word.truncate(start);
            delete_optional(word, &["ic"], r2);
        }
        Standard::Log => word.replace_from(start, "log"),
        Standard::U => word.replace_from(start, "u"),
        Standard::Ente => word.replace_from(start, "ente"),
        Standard::Amente => {
            word.truncate(start);
            if delete_optional(word, &["iv", "os", "ic", "ad"], r2) == Some("iv") {
                delete_optional(word, &["at"], r2);
            }
        }
        Standard::Mente => {
            word.truncate(start);
            delete_optional(word, &["ante", "able", "ible"], r2);
        }
        Standard::Idad => {
            word.truncate(start);
            delete_optional(word, &["abil", "ic", "iv"], r2);
        }
        Standard::Iv => {
            word.truncate(start);
            delete_optional(word, &["at"], r2);
        }
    }
    true
}

fn y_verb_suffix(word: &mut Word) -> bool {
    let Some(start) = Y_VERB.iter().filter_map(|s| word.suffix_start(s)).filter(|&p| p >= word.rv).min() else {
        return false;
    };
    if word.char_before(start) != Some('u') {
        return false;
    }
    word.truncate(start);
    true
}

fn verb_suffix(word: &mut Word) -> bool {
    let rv = word.rv;
    let gu = VERB_GU.iter().filter_map(|s| word.suffix_start(s)).filter(|&p| p >= rv).min();
    let other = VERB_OTHER.iter().filter_map(|s| word.suffix_start(s)).filter(|&p| p >= rv).min();
    match (gu, other) {
        (Some(g), o) if o.is_none_or(|o| g < o) => {
            let mut cut = g;
            if word.char_before(g) == Some('u') && word.char_before(g - 1) == Some('g') {
                cut = g - 1;
            }
            word.truncate(cut);
            true
        }
        (_, Some(o)) => {
            word.truncate(o);
            true
        }
        _ => false,
    }
}

fn residual_suffix(word: &mut Word) {
    const PLAIN: &[&str] = &["os", "a", "o", "á", "í", "ó"];
    const E: &[&str] = &["e", "é"];
    let plain = PLAIN.iter().filter_map(|s| word.suffix_start(s)).min();
    let e = E.iter().filter_map(|s| word.suffix_start(s)).min();
    let rv = word.rv;
    match (plain, e) {
        (Some(p), _) => {
            if p >= rv {
                word.truncate(p);
            }
        }
        (None, Some(p)) => {
            if p >= rv {
                word.truncate(p);
                if p >= 1
                    && word.char_before(p) == Some('u')
                    && word.char_before(p - 1) == Some('g')
                    && p > rv
                {
                    word.truncate(p - 1);
                }
            }
        }
        (None, None) => {}
    }
}

fn strip_acute(c: char) -> char {
    match c {
        'á' => 'a',
        'é' => 'e',
        'í' => 'i',
        'ó' => 'o',
        'ú' => 'u',
        other => other,
    }
}

/// Stem a single lowercase Spanish word.
pub fn stem(word: &str) -> String {
    let mut w = Word::new(word);
    if w.len() == 0 {
        return String::new();
    }
    attached_pronoun(&mut w);
    if !standard_suffix(&mut w) && !y_verb_suffix(&mut w) {
        verb_suffix(&mut w);
    }
    residual_suffix(&mut w);
    w.w.into_iter().map(strip_acute).collect()
}

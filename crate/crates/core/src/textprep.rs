//! Text normalization and sentence segmentation.
//!
//! The full cleaning pipeline runs in a fixed order: quote normalization,
//! contraction expansion, special-character aliasing, punctuation
//! separation and finally sentence splitting. Contractions have to be
//! matched before apostrophes get pulled away from their words.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters that are pulled apart from neighbouring words.
pub const PUNCTUATION_MARKS: &[char] = &['.', ',', '?', '-', '–', '—', '(', ')', '\'', '…', '"', ':', ';', '!'];

/// Tokens that close a sentence once punctuation has been separated.
pub const SENTENCE_TERMINATORS: &[&str] = &[".", "?", "!", "…", "..."];

/// Returns true if `c` belongs to the punctuation mark set.
pub fn is_punctuation_mark(c: char) -> bool {
    PUNCTUATION_MARKS.contains(&c)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("duplicate contraction key after case folding: {0}")]
    DuplicateKey(String),
    #[error("expansion {expansion:?} of {key:?} contains contraction {inner:?}")]
    RecursiveExpansion {
        key: String,
        expansion: String,
        inner: String,
    },
    #[error("contraction key {0:?} is not a single apostrophe-joined token")]
    MalformedKey(String),
}

/// Case-insensitive mapping from contracted forms to their expansions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionTable {
    entries: HashMap<String, String>,
}

const ENGLISH_CONTRACTIONS: &[(&str, &str)] = &[
    ("ain't", "am not"),
    ("aren't", "are not"),
    ("can't", "cannot"),
    ("couldn't", "could not"),
    ("couldn't've", "could not have"),
    ("didn't", "did not"),
    ("doesn't", "does not"),
    ("don't", "do not"),
    ("hadn't", "had not"),
    ("hasn't", "has not"),
    ("haven't", "have not"),
    ("isn't", "is not"),
    ("mightn't", "might not"),
    ("mustn't", "must not"),
    ("needn't", "need not"),
    ("shan't", "shall not"),
    ("shouldn't", "should not"),
    ("wasn't", "was not"),
    ("weren't", "were not"),
    ("won't", "will not"),
    ("wouldn't", "would not"),
    ("i'm", "I am"),
    ("i've", "I have"),
    ("i'll", "I will"),
    ("i'd", "I would"),
    ("you're", "you are"),
    ("you've", "you have"),
    ("you'll", "you will"),
    ("you'd", "you would"),
    ("he'll", "he will"),
    ("he'd", "he would"),
    ("he's", "he is"),
    ("she'll", "she will"),
    ("she'd", "she would"),
    ("she's", "she is"),
    ("it'll", "it will"),
    ("it'd", "it would"),
    ("it's", "it is"),
    ("we're", "we are"),
    ("we've", "we have"),
    ("we'll", "we will"),
    ("we'd", "we would"),
    ("they're", "they are"),
    ("they've", "they have"),
    ("they'll", "they will"),
    ("they'd", "they would"),
    ("that's", "that is"),
    ("that'll", "that will"),
    ("that'd", "that would"),
    ("there's", "there is"),
    ("there'll", "there will"),
    ("there'd", "there would"),
    ("here's", "here is"),
    ("what's", "what is"),
    ("what're", "what are"),
    ("what'll", "what will"),
    ("who's", "who is"),
    ("who'll", "who will"),
    ("who'd", "who would"),
    ("who've", "who have"),
    ("where's", "where is"),
    ("where'd", "where did"),
    ("when's", "when is"),
    ("why's", "why is"),
    ("how's", "how is"),
    ("how'd", "how did"),
    ("let's", "let us"),
    ("y'all", "you all"),
    ("ma'am", "madam"),
    ("o'clock", "of the clock"),
    ("should've", "should have"),
    ("would've", "would have"),
    ("could've", "could have"),
    ("might've", "might have"),
    ("must've", "must have"),
];

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}]+(?:['’][\p{L}\p{N}]+)*").unwrap())
}

fn fold_key(s: &str) -> String {
    s.replace('’', "'").to_lowercase()
}

impl ContractionTable {
    /// Builds a table, enforcing unique case-folded keys and
    /// non-recursive expansions.
    pub fn from_pairs<K, V, I>(pairs: I) -> Result<Self, TableError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let mut entries = HashMap::new();
        for (key, expansion) in pairs {
            let folded = fold_key(key.as_ref());
            let is_token = word_regex()
                .find(&folded)
                .is_some_and(|m| m.start() == 0 && m.end() == folded.len());
            if !is_token {
                return Err(TableError::MalformedKey(key.as_ref().to_string()));
            }
            if entries.insert(folded.clone(), expansion.into()).is_some() {
                return Err(TableError::DuplicateKey(folded));
            }
        }
        for (key, expansion) in &entries {
            for m in word_regex().find_iter(expansion) {
                let inner = fold_key(m.as_str());
                if entries.contains_key(&inner) {
                    return Err(TableError::RecursiveExpansion {
                        key: key.clone(),
                        expansion: expansion.clone(),
                        inner,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    /// The built-in English table. Possessive-ambiguous `'s` forms on
    /// nouns are left alone.
    pub fn english() -> Self {
        Self::from_pairs(ENGLISH_CONTRACTIONS.iter().copied()).expect("built-in contraction table is well formed")
    }

    /// Looks up a contraction, ignoring case and apostrophe style.
    pub fn get(&self, form: &str) -> Option<&str> {
        self.entries.get(&fold_key(form)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for ContractionTable {
    fn default() -> Self {
        Self::english()
    }
}

/// Replaces every whole-token contraction with its expansion. An
/// upper-case initial on the source token carries over to the expansion.
pub fn expand_contractions(text: &str, table: &ContractionTable) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    let mut last = 0;
    for m in word_regex().find_iter(text) {
        let token = m.as_str();
        if !token.contains(['\'', '’']) {
            continue;
        }
        let Some(expansion) = table.get(token) else {
            continue;
        };
        out.push_str(&text[last..m.start()]);
        let capitalize = token.chars().next().is_some_and(char::is_uppercase);
        if capitalize {
            let mut chars = expansion.chars();
            if let Some(first) = chars.next() {
                out.extend(first.to_uppercase());
                out.push_str(chars.as_str());
            }
        } else {
            out.push_str(expansion);
        }
        last = m.end();
    }
    out.push_str(&text[last..]);
    out
}

/// Alias for a special character, if it has one.
pub fn special_char_alias(c: char) -> Option<&'static str> {
    let alias = match c {
        'α' | 'Α' => "alpha",
        'β' | 'Β' => "beta",
        'γ' | 'Γ' => "gamma",
        'δ' | 'Δ' => "delta",
        'ε' | 'Ε' => "epsilon",
        'ζ' | 'Ζ' => "zeta",
        'η' | 'Η' => "eta",
        'θ' | 'Θ' => "theta",
        'ι' | 'Ι' => "iota",
        'κ' | 'Κ' => "kappa",
        'λ' | 'Λ' => "lambda",
        'μ' | 'Μ' => "mu",
        'ν' | 'Ν' => "nu",
        'ξ' | 'Ξ' => "xi",
        'ο' | 'Ο' => "omicron",
        'π' | 'Π' => "pi",
        'ρ' | 'Ρ' => "rho",
        'σ' | 'ς' | 'Σ' => "sigma",
        'τ' | 'Τ' => "tau",
        'υ' | 'Υ' => "upsilon",
        'φ' | 'Φ' => "phi",
        'χ' | 'Χ' => "chi",
        'ψ' | 'Ψ' => "psi",
        'ω' | 'Ω' => "omega",
        '&' => "and",
        '%' => "percent",
        '$' => "dollar",
        '@' => "at",
        _ => return None,
    };
    Some(alias)
}

/// Replaces aliased characters in place; everything else is copied as is.
pub fn replace_special_chars(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match special_char_alias(c) {
            Some(alias) => out.push_str(alias),
            None => out.push(c),
        }
    }
    out
}

/// Maps typographic quotes onto their ASCII forms.
pub fn normalize_quotes(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '‘' | '’' | '‚' | '′' => '\'',
            '“' | '”' | '„' | '″' => '"',
            other => other,
        })
        .collect()
}

/// Surrounds every punctuation mark with single spaces, collapses
/// whitespace runs and trims. A run of three or more dots stays together
/// as one ellipsis token.
pub fn separate_punctuation(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut spaced = String::with_capacity(text.len() * 2);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '.' {
            let run = chars[i..].iter().take_while(|&&d| d == '.').count();
            if run >= 3 {
                spaced.push(' ');
                spaced.extend(std::iter::repeat_n('.', run));
                spaced.push(' ');
                i += run;
                continue;
            }
        }
        if is_punctuation_mark(c) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
        i += 1;
    }
    collapse_whitespace(&spaced)
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_terminator(token: &str) -> bool {
    SENTENCE_TERMINATORS.contains(&token) || (token.len() >= 3 && token.bytes().all(|b| b == b'.'))
}

/// Splits punctuation-separated text after terminator tokens. Consecutive
/// terminators (`? !`, `! ! !`) stay with the sentence they close.
pub fn split_sentences(cleaned: &str) -> Vec<String> {
    let tokens: Vec<&str> = cleaned.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        current.push(token);
        let next_is_terminator = tokens.get(i + 1).is_some_and(|t| is_terminator(t));
        if is_terminator(token) && !next_is_terminator {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    sentences
}

/// Upper-cases the first alphabetic character and lower-cases every other
/// alphabetic character. A first letter without a single-character
/// upper-case form is left as it is.
pub fn to_sentence_case(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut seen_alpha = false;
    for c in text.chars() {
        if c.is_alphabetic() {
            if seen_alpha {
                out.extend(c.to_lowercase());
            } else {
                let mut upper = c.to_uppercase();
                match (upper.next(), upper.next()) {
                    (Some(u), None) => out.push(u),
                    _ => out.push(c),
                }
                seen_alpha = true;
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// A text after the full cleaning pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanText {
    pub original: String,
    pub cleaned: String,
    pub sentences: Vec<String>,
}

/// Runs every cleaning pass in order and splits the result into sentences.
pub fn preprocess(text: &str, table: &ContractionTable) -> CleanText {
    let quoted = normalize_quotes(text);
    let expanded = expand_contractions(&quoted, table);
    let aliased = replace_special_chars(&expanded);
    let cleaned = separate_punctuation(&aliased);
    let sentences = split_sentences(&cleaned);
    CleanText {
        original: text.to_string(),
        cleaned,
        sentences,
    }
}

//! Paths over the thread multigraph.
//!
//! Letters are stored in application order: `letters[0]` runs first. The
//! conventional right-to-left rendering (`n_k ... n_1`) is only used by
//! [`Word::composition_order`] and `Display`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Multigraph, ThreadId};
use crate::value::PortType;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    letters: Vec<ThreadId>,
    anchor: Option<PortType>,
}

impl Word {
    /// Builds a word from letters listed first-applied first.
    pub fn new(letters: impl IntoIterator<Item = impl Into<ThreadId>>) -> Self {
        Word { letters: letters.into_iter().map(Into::into).collect(), anchor: None }
    }

    /// Builds a word from letters listed last-applied first (`n_k ... n_1`).
    pub fn from_composition_order(letters: impl IntoIterator<Item = impl Into<ThreadId>>) -> Self {
        let mut w = Word::new(letters);
        w.letters.reverse();
        w
    }

    /// The empty path at `v`, i.e. the identity on `v`.
    pub fn empty(anchor: PortType) -> Self {
        Word { letters: Vec::new(), anchor: Some(anchor) }
    }

    pub fn with_anchor(mut self, anchor: PortType) -> Self {
        self.anchor = Some(anchor);
        self
    }

    pub fn letters(&self) -> &[ThreadId] {
        &self.letters
    }

    pub fn anchor(&self) -> Option<&PortType> {
        self.anchor.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn composition_order(&self) -> Vec<ThreadId> {
        self.letters.iter().rev().copied().collect()
    }

    pub fn letter_set(&self) -> BTreeSet<ThreadId> {
        self.letters.iter().copied().collect()
    }

    /// `second · self`: run `self` first, then `second`.
    pub fn then(&self, second: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&second.letters);
        Word { letters, anchor: self.anchor.clone().or_else(|| second.anchor.clone()) }
    }

    /// Splits into `(first, second)` with `first` holding the first `at` applied letters.
    pub fn split_at(&self, at: usize) -> (Word, Word) {
        let (a, b) = self.letters.split_at(at);
        (Word { letters: a.to_vec(), anchor: None }, Word { letters: b.to_vec(), anchor: None })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return match &self.anchor {
                Some(a) => write!(f, "ε_{a}"),
                None => f.write_str("ε"),
            };
        }
        let parts: Vec<String> = self.composition_order().iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// A word known to be a path in a particular graph, annotated with its endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedWord {
    word: Word,
    src: PortType,
    tgt: PortType,
}

impl ValidatedWord {
    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn letters(&self) -> &[ThreadId] {
        self.word.letters()
    }

    pub fn src(&self) -> &PortType {
        &self.src
    }

    pub fn tgt(&self) -> &PortType {
        &self.tgt
    }
}

/// Checks the path condition `tgt(n_i) = src(n_{i+1})`.
///
/// An empty word needs an anchor vertex; a non-empty word ignores its anchor.
pub fn validate_word(graph: &Multigraph, word: &Word) -> Result<ValidatedWord> {
    let Some(&first) = word.letters.first() else {
        let anchor = word
            .anchor
            .clone()
            .ok_or_else(|| Error::schema("word", "an empty word needs an anchor vertex"))?;
        return Ok(ValidatedWord { word: word.clone(), src: anchor.clone(), tgt: anchor });
    };
    let mut prev = graph.thread(first)?;
    let src = prev.src.clone();
    for (i, &n) in word.letters.iter().enumerate().skip(1) {
        let next = graph.thread(n)?;
        if prev.tgt != next.src {
            return Err(Error::PathMismatch { index: i, tgt: prev.tgt.name.clone(), src: next.src.name.clone() });
        }
        prev = next;
    }
    Ok(ValidatedWord { word: word.clone(), src, tgt: prev.tgt.clone() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmapCheck {
    Ok,
    RepeatedLetters(BTreeSet<ThreadId>),
}

/// Reports whether all letters are pairwise distinct, the precondition for
/// evaluating the whole word as one pipeline.
pub fn smap_check(word: &Word) -> SmapCheck {
    let mut seen = HashSet::new();
    let repeated: BTreeSet<ThreadId> = word.letters.iter().filter(|n| !seen.insert(**n)).copied().collect();
    if repeated.is_empty() {
        SmapCheck::Ok
    } else {
        SmapCheck::RepeatedLetters(repeated)
    }
}

/// Factorization of a word into consecutive distinct-letter pieces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSegmentation {
    /// Segments in application order: `segments[0]` runs first.
    pub segments: Vec<Word>,
}

impl WordSegmentation {
    /// Segments listed last-applied first, each in composition order.
    pub fn composition_order(&self) -> Vec<Vec<ThreadId>> {
        self.segments.iter().rev().map(Word::composition_order).collect()
    }
}

/// Greedy partition from the first-applied end into maximal segments with
/// pairwise-distinct letters.
pub fn segment_word(word: &Word) -> WordSegmentation {
    let mut segments = Vec::new();
    let mut current: Vec<ThreadId> = Vec::new();
    let mut seen = HashSet::new();
    for &n in &word.letters {
        if !seen.insert(n) {
            segments.push(Word::new(std::mem::take(&mut current)));
            seen.clear();
            seen.insert(n);
        }
        current.push(n);
    }
    let mut last = Word::new(current);
    last.anchor = word.anchor.clone();
    segments.push(last);
    WordSegmentation { segments }
}

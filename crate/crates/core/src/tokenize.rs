//! Tweet text to token sets, and Jaccard similarity between token sets.
//!
//! Rules, applied to each whitespace-separated chunk of the text:
//!
//! * a chunk starting with `http://`, `https://` or `www.` is one URL token; trailing
//!   sentence punctuation is trimmed and the URL keeps its case;
//! * emoji clusters (an emoji plus any variation selector, skin-tone modifier or
//!   zero-width-joined continuation) are split out as tokens of their own;
//! * every remaining piece has leading and trailing punctuation stripped, keeping a
//!   leading `#` or `@` so hashtags and mentions stay single tokens; inner characters
//!   (apostrophes, hyphens, dots) are kept as they are;
//! * non-URL tokens are lowercased unless disabled.
//!
//! The hashtag and URL lists carried by a record are merged into the set, so a tag
//! that was stripped from the visible text still counts.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::{Tweet, TweetId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    /// Tweets with fewer tokens are "too short" and never compared.
    pub min_token_count: usize,
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            min_token_count: 2,
            lowercase: true,
        }
    }
}

/// Sorted, duplicate-free token set of one tweet.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TokenSet {
    tokens: Vec<String>,
    pub source_tweet_id: Option<TweetId>,
}

impl TokenSet {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        TokenSet {
            tokens: set.into_iter().collect(),
            source_tweet_id: None,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens
            .binary_search_by(|t| t.as_str().cmp(token))
            .is_ok()
    }

    pub fn is_too_short(&self, config: &TokenizerConfig) -> bool {
        self.tokens.len() < config.min_token_count
    }
}

pub fn is_url(chunk: &str) -> bool {
    let lower = chunk.get(..8).unwrap_or(chunk).to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn trim_url(chunk: &str) -> &str {
    chunk.trim_end_matches(|c: char| ".,;:!?)]}'\"…".contains(c))
}

fn emoji_ranges() -> &'static [(u32, u32)] {
    static RANGES: OnceLock<Vec<(u32, u32)>> = OnceLock::new();
    RANGES.get_or_init(|| {
        include_str!("../data/emoji_ranges.txt")
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut it = l.split_whitespace();
                let lo = u32::from_str_radix(it.next().unwrap(), 16).unwrap();
                let hi = u32::from_str_radix(it.next().unwrap(), 16).unwrap();
                (lo, hi)
            })
            .collect()
    })
}

pub fn is_emoji(c: char) -> bool {
    let cp = c as u32;
    emoji_ranges().iter().any(|&(lo, hi)| lo <= cp && cp <= hi)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3)
}

const ZWJ: char = '\u{200D}';

/// Splits a chunk into alternating text pieces and emoji clusters.
fn split_emoji(chunk: &str) -> Vec<(bool, &str)> {
    let mut out = Vec::new();
    let mut iter = chunk.char_indices().peekable();
    let mut text_start = 0;
    while let Some((i, c)) = iter.next() {
        if !is_emoji(c) {
            continue;
        }
        if text_start < i {
            out.push((false, &chunk[text_start..i]));
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, next)) = iter.peek() {
            if is_emoji_modifier(next) {
                end = j + next.len_utf8();
                iter.next();
            } else if next == ZWJ {
                iter.next();
                end = j + next.len_utf8();
                if let Some(&(k, joined)) = iter.peek() {
                    if is_emoji(joined) {
                        end = k + joined.len_utf8();
                        iter.next();
                    }
                }
            } else {
                break;
            }
        }
        out.push((true, &chunk[i..end]));
        text_start = end;
    }
    if text_start < chunk.len() {
        out.push((false, &chunk[text_start..]));
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Strips surrounding punctuation, keeping one leading `#` or `@` marker.
pub(crate) fn strip_word(piece: &str) -> Option<&str> {
    let end = piece.trim_end_matches(|c: char| !is_word_char(c));
    let start = end.find(is_word_char)?;
    let marker = end[..start]
        .char_indices()
        .next_back()
        .filter(|&(_, c)| c == '#' || c == '@')
        .map(|(i, _)| i);
    Some(&end[marker.unwrap_or(start)..])
}

/// Raw, case-preserving word pieces of a text in order; URLs are kept whole,
/// emoji clusters are returned separately. Shared with feature extraction.
pub(crate) fn raw_pieces(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if is_url(chunk) {
            let url = trim_url(chunk);
            if !url.is_empty() {
                out.push(Piece::Url(url));
            }
            continue;
        }
        for (emoji, part) in split_emoji(chunk) {
            if emoji {
                out.push(Piece::Emoji(part));
            } else if let Some(word) = strip_word(part) {
                out.push(Piece::Word(word));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Piece<'a> {
    Url(&'a str),
    Emoji(&'a str),
    Word(&'a str),
}

fn normalize_hashtag(tag: &str, lowercase: bool) -> Option<String> {
    let bare = tag.trim().trim_start_matches('#');
    if bare.is_empty() {
        return None;
    }
    let tag = format!("#{bare}");
    Some(if lowercase { tag.to_lowercase() } else { tag })
}

pub fn tokenize(text: &str, hashtags: &[String], urls: &[String], config: &TokenizerConfig) -> TokenSet {
    let mut set = BTreeSet::new();
    for piece in raw_pieces(text) {
        match piece {
            Piece::Url(u) => {
                set.insert(u.to_string());
            }
            Piece::Emoji(e) => {
                set.insert(e.to_string());
            }
            Piece::Word(w) => {
                set.insert(if config.lowercase {
                    w.to_lowercase()
                } else {
                    w.to_string()
                });
            }
        }
    }
    set.extend(
        hashtags
            .iter()
            .filter_map(|h| normalize_hashtag(h, config.lowercase)),
    );
    set.extend(
        urls.iter()
            .map(|u| u.trim())
            .filter(|u| !u.is_empty())
            .map(str::to_string),
    );
    TokenSet {
        tokens: set.into_iter().collect(),
        source_tweet_id: None,
    }
}

pub fn tokenize_tweet(tweet: &Tweet, config: &TokenizerConfig) -> TokenSet {
    let mut set = tokenize(&tweet.text, &tweet.hashtags, &tweet.urls, config);
    set.source_tweet_id = Some(tweet.tweet_id);
    set
}

/// `|a ∩ b| / |a ∪ b|`; zero when both sets are empty.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    jaccard_sorted(&a.tokens, &b.tokens)
}

/// Intersection size of two ascending, duplicate-free slices.
pub fn intersection_size<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Jaccard similarity of two ascending, duplicate-free slices.
pub fn jaccard_sorted<T: Ord>(a: &[T], b: &[T]) -> f64 {
    let inter = intersection_size(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

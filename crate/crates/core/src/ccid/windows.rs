use std::ops::Range;

use serde::Serialize;

use super::DetectorConfig;
use crate::corpus::{CorpusIndex, Timestamp, TweetId};
use crate::error::Result;

/// One window of the rolling segmentation: `[start, end)` with `start` a multiple
/// of the slide. `range` indexes the corpus' sorted tweet array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowTask {
    pub window_index: i64,
    pub start: Timestamp,
    pub end: Timestamp,
    #[serde(skip)]
    pub range: Range<usize>,
}

impl WindowTask {
    pub fn tweet_ids(&self, index: &CorpusIndex) -> Vec<TweetId> {
        index.tweets()[self.range.clone()]
            .iter()
            .map(|t| t.tweet_id)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

/// Epoch-aligned windows over the corpus.
///
/// Window `k` covers `[k·slide, k·slide + window)`. Of all windows touching the
/// corpus only indices `first_slot ..= max(first_slot, last_slot − m + 1)` are kept,
/// where `m = window / slide`: the windows hanging over either end of the corpus see
/// a subset of their inner neighbour's tweets. Every interior tweet lands in exactly
/// `m` windows, and two tweets share a window iff their slot indices differ by less
/// than `m`. Empty windows are skipped.
pub fn make_windows(index: &CorpusIndex, config: &DetectorConfig) -> Result<Vec<WindowTask>> {
    config.validate()?;
    let tweets = index.tweets();
    let (Some(first), Some(last)) = (tweets.first(), tweets.last()) else {
        return Ok(Vec::new());
    };
    let slide = config.slide_secs;
    let m = config.windows_per_tweet();
    let first_slot = first.timestamp.div_euclid(slide);
    let last_slot = last.timestamp.div_euclid(slide);
    let last_window = first_slot.max(last_slot - m + 1);

    let mut tasks = Vec::new();
    for k in first_slot..=last_window {
        let start = k * slide;
        let end = start + config.window_secs;
        let range = index.range_of(start, end);
        if range.is_empty() {
            continue;
        }
        tasks.push(WindowTask {
            window_index: k,
            start,
            end,
            range,
        });
    }
    Ok(tasks)
}

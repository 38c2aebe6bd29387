//! Search budgets.

use std::time::{Duration, Instant};

/// Limits for exact searches.
///
/// `max_expansions` and `search_time` apply to every individual unordered
/// tree search; `deadline` is a wall-clock instant shared by a whole
/// top-level computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_expansions: Option<u64>,
    pub search_time: Option<Duration>,
    pub deadline: Option<Instant>,
}

impl Default for Budget {
    /// 10^7 node expansions or 60 s per search, whichever comes first.
    fn default() -> Self {
        Budget { max_expansions: Some(10_000_000), search_time: Some(Duration::from_secs(60)), deadline: None }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { max_expansions: None, search_time: None, deadline: None }
    }

    pub fn with_expansions(mut self, n: u64) -> Self {
        self.max_expansions = Some(n);
        self
    }

    /// Sets the shared deadline to `timeout` from now.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.deadline = Some(Instant::now() + timeout);
        self
    }

    pub fn deadline_passed(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Limits for one search starting now.
    pub(crate) fn start_search(&self) -> SearchLimits {
        let local = self.search_time.map(|t| Instant::now() + t);
        let deadline = match (local, self.deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        SearchLimits {
            max_expansions: self.max_expansions.unwrap_or(u64::MAX),
            deadline,
            expansions: 0,
            exhausted: false,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SearchLimits {
    max_expansions: u64,
    deadline: Option<Instant>,
    pub expansions: u64,
    pub exhausted: bool,
}

impl SearchLimits {
    /// Counts one expansion; returns false once the budget is spent.
    #[inline]
    pub fn expand(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.expansions += 1;
        if self.expansions > self.max_expansions {
            self.exhausted = true;
        } else if self.expansions.is_multiple_of(512) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.exhausted = true;
                }
            }
        }
        !self.exhausted
    }
}

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    EnvInput,
    UserOutput,
}

/// Token and call accounting. `users` only counts completions that are
/// neither summarization nor clue investigation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageCounters {
    pub env_tokens: u64,
    pub envs: u64,
    pub user_tokens: u64,
    pub users: u64,
    pub failures: u64,
}

impl UsageCounters {
    pub fn charge(&mut self, direction: Direction, tokens: u64, countable_completion: bool) {
        match direction {
            Direction::EnvInput => {
                self.env_tokens += tokens;
                self.envs += 1;
            }
            Direction::UserOutput => {
                self.user_tokens += tokens;
                if countable_completion {
                    self.users += 1;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::default()
    }
}

impl AddAssign for UsageCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.env_tokens += rhs.env_tokens;
        self.envs += rhs.envs;
        self.user_tokens += rhs.user_tokens;
        self.users += rhs.users;
        self.failures += rhs.failures;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarization_is_not_a_user_completion() {
        let mut c = UsageCounters::default();
        c.charge(Direction::UserOutput, 40, false);
        assert_eq!((c.user_tokens, c.users), (40, 0));
        c.charge(Direction::UserOutput, 25, true);
        assert_eq!((c.user_tokens, c.users), (65, 1));
    }

    #[test]
    fn zero_token_env_request_still_counts() {
        let mut c = UsageCounters::default();
        c.charge(Direction::EnvInput, 0, true);
        assert_eq!((c.env_tokens, c.envs), (0, 1));
    }
}

//! Response grammar: `### THOUGHT: ...` followed by `### RESPONSE: ...`, with
//! kind-specific payloads decoded from the response text.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::prompt::PromptKind;
use crate::engine::Action;

pub const THOUGHT_MARKER: &str = "### THOUGHT:";
pub const RESPONSE_MARKER: &str = "### RESPONSE:";

const ASK_TAG: &str = "【Ask】";
const INVESTIGATE_TAG: &str = "【Investigate】";

/// Names a response may legally refer to. Empty lists disable resolution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// The responding character; never a legal Ask target or vote.
    pub speaker: Option<String>,
    /// Characters that may be asked or voted for.
    pub targets: Vec<String>,
    /// Clue locations (and clue ids) that may be investigated.
    pub places: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value")]
pub enum Payload {
    Text(String),
    Action(Action),
    Score(u8),
    Vote(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub thought: String,
    pub response: String,
    pub payload: Payload,
}

impl ParsedResponse {
    /// Canonical raw form; parsing it again yields an equal value.
    pub fn to_raw(&self) -> String {
        format!("{THOUGHT_MARKER} {}\n{RESPONSE_MARKER} {}", self.thought, self.response)
    }

    pub fn text(&self) -> &str {
        match &self.payload {
            Payload::Text(t) => t,
            _ => &self.response,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseFailure {
    MissingMarkers,
    EmptyResponse,
    MissingAction,
    MalformedAction(String),
    UnknownTarget(String),
    SelfTarget(String),
    UnknownLocation(String),
    NotAnInteger(String),
    OutOfRange { value: i64, min: i64, max: i64 },
    UnknownName(String),
    MalformedSummaryLine(String),
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseFailure::MissingMarkers => write!(
                f,
                "missing `{THOUGHT_MARKER}` / `{RESPONSE_MARKER}` markers"
            ),
            ParseFailure::EmptyResponse => write!(f, "empty response"),
            ParseFailure::MissingAction => {
                write!(f, "response must start an action with {ASK_TAG} or {INVESTIGATE_TAG}")
            }
            ParseFailure::MalformedAction(why) => write!(f, "malformed action: {why}"),
            ParseFailure::UnknownTarget(t) => write!(f, "`{t}` is not a character you can ask"),
            ParseFailure::SelfTarget(t) => write!(f, "`{t}` cannot ask itself"),
            ParseFailure::UnknownLocation(l) => write!(f, "`{l}` is not a location you can investigate"),
            ParseFailure::NotAnInteger(s) => write!(f, "`{s}` is not an integer"),
            ParseFailure::OutOfRange { value, min, max } => {
                write!(f, "{value} is outside [{min}, {max}]")
            }
            ParseFailure::UnknownName(n) => write!(f, "`{n}` is not a participant"),
            ParseFailure::MalformedSummaryLine(l) => {
                write!(f, "summary line `{l}` is not in `Name: 【Action】: Content` form")
            }
        }
    }
}

impl std::error::Error for ParseFailure {}

/// Splits raw output into (thought, response). Text before the first thought
/// marker is ignored.
pub fn split_markers(raw: &str) -> Result<(String, String), ParseFailure> {
    let t = raw.find(THOUGHT_MARKER).ok_or(ParseFailure::MissingMarkers)?;
    let after_thought = &raw[t + THOUGHT_MARKER.len()..];
    let r = after_thought
        .find(RESPONSE_MARKER)
        .ok_or(ParseFailure::MissingMarkers)?;
    let thought = after_thought[..r].trim().to_string();
    let response = after_thought[r + RESPONSE_MARKER.len()..].trim().to_string();
    Ok((thought, response))
}

pub fn parse_response(
    kind: PromptKind,
    raw: &str,
    vocab: &Vocabulary,
) -> Result<ParsedResponse, ParseFailure> {
    let (thought, response) = split_markers(raw)?;
    if response.is_empty() {
        return Err(ParseFailure::EmptyResponse);
    }
    let payload = match kind {
        PromptKind::Converse => Payload::Action(parse_action(&response, vocab)?),
        PromptKind::SuspicionScore | PromptKind::TrustScore => {
            Payload::Score(parse_integer(&response, 0, 2)?)
        }
        PromptKind::AbilityJudge => Payload::Score(parse_integer(&response, 0, 20)?),
        PromptKind::Vote => Payload::Vote(parse_vote(&response, vocab)?),
        PromptKind::HistorySummary => {
            check_summary_lines(&response)?;
            Payload::Text(response.clone())
        }
        PromptKind::Introduction
        | PromptKind::AskReply
        | PromptKind::ScriptSummary
        | PromptKind::Reconstruction => Payload::Text(response.clone()),
    };
    Ok(ParsedResponse {
        thought,
        response,
        payload,
    })
}

/// Exact match first, then case-insensitive.
pub fn resolve_name<'a>(candidate: &str, names: &'a [String]) -> Option<&'a str> {
    names
        .iter()
        .find(|n| n.as_str() == candidate)
        .or_else(|| {
            let lower = candidate.to_lowercase();
            names.iter().find(|n| n.to_lowercase() == lower)
        })
        .map(String::as_str)
}

fn parse_action(response: &str, vocab: &Vocabulary) -> Result<Action, ParseFailure> {
    let ask = response.find(ASK_TAG);
    let investigate = response.find(INVESTIGATE_TAG);
    let (is_ask, start) = match (ask, investigate) {
        (Some(a), Some(i)) => (a < i, a.min(i)),
        (Some(a), None) => (true, a),
        (None, Some(i)) => (false, i),
        (None, None) => return Err(ParseFailure::MissingAction),
    };
    let tag = if is_ask { ASK_TAG } else { INVESTIGATE_TAG };
    let rest = response[start + tag.len()..].trim_start();
    let rest = rest
        .strip_prefix('【')
        .ok_or_else(|| ParseFailure::MalformedAction("expected 【name】 after the action tag".into()))?;
    let close = rest
        .find('】')
        .ok_or_else(|| ParseFailure::MalformedAction("unclosed 【".into()))?;
    let name = rest[..close].trim();
    if name.is_empty() {
        return Err(ParseFailure::MalformedAction("empty name".into()));
    }
    let body = rest[close + '】'.len_utf8()..].trim_start();
    let body = body
        .strip_prefix(':')
        .or_else(|| body.strip_prefix('：'))
        .unwrap_or(body)
        .trim();

    if is_ask {
        if body.is_empty() {
            return Err(ParseFailure::MalformedAction("empty question".into()));
        }
        let is_self = vocab
            .speaker
            .as_deref()
            .is_some_and(|s| s.to_lowercase() == name.to_lowercase());
        if is_self {
            return Err(ParseFailure::SelfTarget(name.to_string()));
        }
        let target = if vocab.targets.is_empty() {
            name.to_string()
        } else {
            resolve_name(name, &vocab.targets)
                .ok_or_else(|| ParseFailure::UnknownTarget(name.to_string()))?
                .to_string()
        };
        Ok(Action::Ask {
            target,
            question: body.to_string(),
        })
    } else {
        let location = if vocab.places.is_empty() {
            name.to_string()
        } else {
            resolve_name(name, &vocab.places)
                .ok_or_else(|| ParseFailure::UnknownLocation(name.to_string()))?
                .to_string()
        };
        Ok(Action::Investigate {
            location_or_clue: location,
            reason: body.to_string(),
        })
    }
}

fn strip_decoration(s: &str) -> &str {
    s.trim()
        .trim_end_matches(['.', '。', '!', '！'])
        .trim_start_matches(['【', '"', '“', '\''])
        .trim_end_matches(['】', '"', '”', '\''])
        .trim()
}

fn parse_integer(response: &str, min: i64, max: i64) -> Result<u8, ParseFailure> {
    let literal = strip_decoration(response);
    let value: i64 = literal
        .parse()
        .map_err(|_| ParseFailure::NotAnInteger(literal.to_string()))?;
    if value < min || value > max {
        return Err(ParseFailure::OutOfRange { value, min, max });
    }
    Ok(value as u8)
}

fn parse_vote(response: &str, vocab: &Vocabulary) -> Result<String, ParseFailure> {
    let name = strip_decoration(response);
    if vocab.targets.is_empty() {
        return Ok(name.to_string());
    }
    resolve_name(name, &vocab.targets)
        .map(str::to_string)
        .ok_or_else(|| ParseFailure::UnknownName(name.to_string()))
}

/// Every nonempty line must read `Name: 【Action】: Content`.
pub fn is_history_line(line: &str) -> bool {
    let Some((name, rest)) = line.split_once(": 【") else {
        return false;
    };
    if name.trim().is_empty() || name.contains('\n') {
        return false;
    }
    match rest.split_once("】: ") {
        Some((action, _)) => !action.is_empty() && !action.contains('】'),
        None => rest
            .strip_suffix("】:")
            .is_some_and(|action| !action.is_empty()),
    }
}

fn check_summary_lines(response: &str) -> Result<(), ParseFailure> {
    match response
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !is_history_line(l))
    {
        Some(bad) => Err(ParseFailure::MalformedSummaryLine(bad.to_string())),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab() -> Vocabulary {
        Vocabulary {
            speaker: Some("Detective Li".into()),
            targets: vec!["Madam Hong".into(), "Old Wang".into()],
            places: vec!["Safe Box".into(), "Study".into()],
        }
    }

    #[test]
    fn decodes_ask() {
        let raw = "### THOUGHT: he lied\n### RESPONSE: 【Ask】【Madam Hong】: Where were you at dusk?";
        let parsed = parse_response(PromptKind::Converse, raw, &Vocabulary::default()).unwrap();
        assert_eq!(parsed.thought, "he lied");
        assert_eq!(
            parsed.payload,
            Payload::Action(Action::Ask {
                target: "Madam Hong".into(),
                question: "Where were you at dusk?".into()
            })
        );
    }

    #[test]
    fn decodes_trust_score() {
        let raw = "### THOUGHT: plausible\n### RESPONSE: 2";
        let parsed = parse_response(PromptKind::TrustScore, raw, &Vocabulary::default()).unwrap();
        assert_eq!(parsed.payload, Payload::Score(2));
    }

    #[test]
    fn vote_without_markers_fails() {
        assert_eq!(
            parse_response(PromptKind::Vote, "I refuse.", &vocab()),
            Err(ParseFailure::MissingMarkers)
        );
    }

    #[test]
    fn tolerates_preamble_whitespace_and_full_width_colon() {
        let raw = "Sure!\n  ### THOUGHT:   x  \n\n### RESPONSE:  【Investigate】【safe box】：  the lock  \n";
        let parsed = parse_response(PromptKind::Converse, raw, &vocab()).unwrap();
        assert_eq!(
            parsed.payload,
            Payload::Action(Action::Investigate {
                location_or_clue: "Safe Box".into(),
                reason: "the lock".into()
            })
        );
    }

    #[test]
    fn rejects_bad_targets() {
        let ask = |name: &str| format!("### THOUGHT: t\n### RESPONSE: 【Ask】【{name}】: why?");
        assert_eq!(
            parse_response(PromptKind::Converse, &ask("Nobody"), &vocab()),
            Err(ParseFailure::UnknownTarget("Nobody".into()))
        );
        assert_eq!(
            parse_response(PromptKind::Converse, &ask("detective li"), &vocab()),
            Err(ParseFailure::SelfTarget("detective li".into()))
        );
        let inv = "### THOUGHT: t\n### RESPONSE: 【Investigate】【Roof】: hmm";
        assert_eq!(
            parse_response(PromptKind::Converse, inv, &vocab()),
            Err(ParseFailure::UnknownLocation("Roof".into()))
        );
        let speak = "### THOUGHT: t\n### RESPONSE: I think it was Wang.";
        assert_eq!(
            parse_response(PromptKind::Converse, speak, &vocab()),
            Err(ParseFailure::MissingAction)
        );
    }

    #[test]
    fn score_ranges() {
        let raw = |s: &str| format!("### THOUGHT: t\n### RESPONSE: {s}");
        let v = Vocabulary::default();
        assert_eq!(
            parse_response(PromptKind::SuspicionScore, &raw("3"), &v),
            Err(ParseFailure::OutOfRange { value: 3, min: 0, max: 2 })
        );
        assert_eq!(
            parse_response(PromptKind::AbilityJudge, &raw("17."), &v).unwrap().payload,
            Payload::Score(17)
        );
        assert_eq!(
            parse_response(PromptKind::AbilityJudge, &raw("25"), &v),
            Err(ParseFailure::OutOfRange { value: 25, min: 0, max: 20 })
        );
        assert!(matches!(
            parse_response(PromptKind::AbilityJudge, &raw("very good"), &v),
            Err(ParseFailure::NotAnInteger(_))
        ));
    }

    #[test]
    fn vote_matches_roster_case_insensitively() {
        let raw = "### THOUGHT: t\n### RESPONSE: old wang.";
        assert_eq!(
            parse_response(PromptKind::Vote, raw, &vocab()).unwrap().payload,
            Payload::Vote("Old Wang".into())
        );
        let raw = "### THOUGHT: t\n### RESPONSE: the gardener";
        assert_eq!(
            parse_response(PromptKind::Vote, raw, &vocab()),
            Err(ParseFailure::UnknownName("the gardener".into()))
        );
    }

    #[test]
    fn summary_lines_must_keep_the_history_format() {
        assert!(is_history_line("Old Wang: 【Speak】: I was asleep."));
        assert!(is_history_line("王: 【Clue】: 保险箱里有刀"));
        assert!(!is_history_line("Old Wang said he was asleep."));
        let ok = "### THOUGHT: t\n### RESPONSE: A: 【Speak】: x\nB: 【Clue】: y";
        assert!(parse_response(PromptKind::HistorySummary, ok, &vocab()).is_ok());
        let bad = "### THOUGHT: t\n### RESPONSE: A and B talked.";
        assert!(matches!(
            parse_response(PromptKind::HistorySummary, bad, &vocab()),
            Err(ParseFailure::MalformedSummaryLine(_))
        ));
    }

    fn plain() -> impl Strategy<Value = String> {
        "[A-Za-z0-9?,'][A-Za-z0-9 ?,']{0,30}[A-Za-z0-9?,']".prop_map(|s| s)
    }

    proptest! {
        #[test]
        fn canonical_form_round_trips(
            thought in plain(), target in "[A-Z][a-z]{1,8}( [A-Z][a-z]{1,8})?", body in plain(), ask in any::<bool>()
        ) {
            let action = if ask {
                Action::Ask { target: target.clone(), question: body.clone() }
            } else {
                Action::Investigate { location_or_clue: target.clone(), reason: body.clone() }
            };
            let parsed = ParsedResponse {
                thought,
                response: action.render_response(),
                payload: Payload::Action(action),
            };
            let again = parse_response(PromptKind::Converse, &parsed.to_raw(), &Vocabulary::default());
            prop_assert_eq!(again, Ok(parsed));
        }

        #[test]
        fn never_panics(bytes in prop::collection::vec(any::<u8>(), 0..200), k in 0usize..10) {
            let raw = String::from_utf8_lossy(&bytes);
            let _ = parse_response(PromptKind::ALL[k], &raw, &vocab());
        }
    }
}

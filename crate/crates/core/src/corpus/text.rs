//! Transcript cleaning and tokenization.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Which tokenizer rules a dataset uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMode {
    /// Transcribed speech: lowercase words, punctuation split off.
    #[default]
    Speech,
    /// Issue-comment text: code spans, URLs and command-like strings stay whole.
    Github,
}

impl fmt::Display for TokenizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizerMode::Speech => "speech",
            TokenizerMode::Github => "github",
        })
    }
}

impl FromStr for TokenizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "speech" => Ok(TokenizerMode::Speech),
            "github" => Ok(TokenizerMode::Github),
            other => Err(format!("unknown tokenizer mode {other:?} (expected speech or github)")),
        }
    }
}

fn regex(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern"))
}

/// Strip SwDA transcription markup from an utterance.
///
/// Removes angle-bracket events (`<laughter>`), brace markers (`{F`, `{D`,
/// `}`) keeping the words inside, resolves `[ reparandum + repair ]` to the
/// repair side (innermost first), drops trailing `/` and `--`, and collapses
/// whitespace.
pub fn clean_speech_text(raw: &str) -> String {
    static EVENTS: OnceLock<Regex> = OnceLock::new();
    static REPAIR: OnceLock<Regex> = OnceLock::new();
    static BRACE: OnceLock<Regex> = OnceLock::new();

    let mut text = regex(&EVENTS, r"<+[^<>]*>+").replace_all(raw, " ").into_owned();

    let repair = regex(&REPAIR, r"\[([^\[\]]*)\]");
    while repair.is_match(&text) {
        text = repair
            .replace_all(&text, |caps: &regex::Captures<'_>| {
                let inner = &caps[1];
                let kept = inner.rsplit('+').next().unwrap_or(inner);
                format!(" {kept} ")
            })
            .into_owned();
    }
    text = text.replace(['[', ']'], " ");

    text = regex(&BRACE, r"\{[A-Z]?").replace_all(&text, " ").into_owned();
    text = text.replace('}', " ");

    let mut words: Vec<&str> = text.split_whitespace().collect();
    while let Some(last) = words.last() {
        match *last {
            "/" | "--" => {
                words.pop();
            }
            w if w.ends_with('/') && w.len() > 1 => {
                let trimmed = w.trim_end_matches('/');
                words.pop();
                words.push(trimmed);
            }
            _ => break,
        }
    }
    words.join(" ")
}

const TRAILING_PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', ')', ']', '"', '\''];
const LEADING_PUNCT: &[char] = &['(', '[', '"'];

/// Split a whitespace-delimited word into leading punctuation, core, and
/// trailing punctuation tokens.
fn split_punct(word: &str) -> (Vec<&str>, &str, Vec<&str>) {
    let mut core = word;
    let mut lead = Vec::new();
    while let Some(c) = core.chars().next() {
        if LEADING_PUNCT.contains(&c) && core.len() > c.len_utf8() {
            lead.push(&core[..c.len_utf8()]);
            core = &core[c.len_utf8()..];
        } else {
            break;
        }
    }
    let mut trail = Vec::new();
    while let Some(c) = core.chars().last() {
        if TRAILING_PUNCT.contains(&c) {
            let at = core.len() - c.len_utf8();
            trail.push(&core[at..]);
            core = &core[..at];
        } else {
            break;
        }
    }
    trail.reverse();
    (lead, core, trail)
}

fn is_command_like(word: &str) -> bool {
    word.contains(['/', '-', '_', '.'])
}

fn is_url(word: &str) -> bool {
    word.starts_with("http://") || word.starts_with("https://") || word.starts_with("www.")
}

fn push_word(word: &str, mode: TokenizerMode, out: &mut Vec<String>) {
    if mode == TokenizerMode::Github && is_url(word) {
        let (_, core, trail) = split_punct(word);
        out.push(core.to_string());
        out.extend(trail.into_iter().map(str::to_string));
        return;
    }
    let (lead, core, trail) = split_punct(word);
    out.extend(lead.into_iter().map(str::to_string));
    if !core.is_empty() {
        if mode == TokenizerMode::Github && is_command_like(core) {
            out.push(core.to_string());
        } else {
            out.push(core.to_lowercase());
        }
    }
    out.extend(trail.into_iter().map(str::to_string));
}

/// Tokenize utterance text.
///
/// Speech mode lowercases, splits on whitespace and separates leading
/// brackets/quotes and trailing punctuation into their own tokens. Github
/// mode additionally keeps fenced and inline code spans, URLs, and words
/// containing `/ - _ .` as single case-preserved tokens.
pub fn tokenize(text: &str, mode: TokenizerMode) -> Vec<String> {
    let mut out = Vec::new();
    match mode {
        TokenizerMode::Speech => {
            for word in text.split_whitespace() {
                push_word(word, mode, &mut out);
            }
        }
        TokenizerMode::Github => {
            static CODE: OnceLock<Regex> = OnceLock::new();
            let code = regex(&CODE, r"```[\s\S]*?```|`[^`\n]+`");
            let mut last = 0;
            for m in code.find_iter(text) {
                for word in text[last..m.start()].split_whitespace() {
                    push_word(word, mode, &mut out);
                }
                out.push(m.as_str().to_string());
                last = m.end();
            }
            for word in text[last..].split_whitespace() {
                push_word(word, mode, &mut out);
            }
        }
    }
    out
}

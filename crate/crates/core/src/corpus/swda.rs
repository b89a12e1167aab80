//! Reader for SwDA utterance files.
//!
//! A file starts with an optional header block (copyright banner and
//! `KEY: value` fields) terminated by a line of `=` characters. Each
//! following non-blank line holds one utterance:
//!
//! ```text
//! sd          A.1 utt1:  I don't have any kids. /
//! ```
//!
//! that is, the raw act tag, `speaker.turn`, an optional `uttN:` marker and
//! the transcribed text.

use std::path::Path;

use super::tagset::TagSet;
use super::text::{clean_speech_text, tokenize, TokenizerMode};
use super::{CorpusError, Dataset, Utterance};

/// One utterance line of an SwDA file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwdaRecord {
    pub dialogue_id: String,
    /// Position of the utterance in the file, from 0.
    pub turn_index: usize,
    pub speaker: String,
    /// Speaker turn number from the `A.12` field.
    pub turn: u32,
    pub raw_tag: String,
    pub raw_text: String,
}

fn parse_speaker_field(field: &str) -> Option<(&str, u32)> {
    let (speaker, turn) = field.split_once('.')?;
    if speaker.is_empty() || !speaker.chars().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    Some((speaker, turn.parse().ok()?))
}

fn is_separator(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 10 && t.chars().all(|c| c == '=')
}

fn header_dialogue_id(header: &[&str]) -> Option<String> {
    header.iter().find_map(|line| {
        let rest = line.trim().strip_prefix("FILENAME:")?;
        let id = rest.trim();
        (!id.is_empty()).then(|| id.to_string())
    })
}

/// Parse the text of one SwDA utterance file.
///
/// `default_id` names the dialogue when the header has no `FILENAME:` field.
pub fn parse_swda_file(raw: &str, default_id: &str) -> Result<Vec<SwdaRecord>, CorpusError> {
    let lines: Vec<&str> = raw.lines().collect();
    let body_start = lines
        .iter()
        .position(|l| is_separator(l))
        .map(|i| i + 1)
        .unwrap_or(0);
    let dialogue_id =
        header_dialogue_id(&lines[..body_start]).unwrap_or_else(|| default_id.to_string());

    let mut records = Vec::new();
    for (offset, line) in lines[body_start..].iter().enumerate() {
        let line_no = body_start + offset + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let malformed = |reason: &str| CorpusError::Parse {
            line: line_no,
            reason: reason.to_string(),
        };

        let (tag, rest) = trimmed
            .split_once(char::is_whitespace)
            .unwrap_or((trimmed, ""));
        if parse_speaker_field(tag).is_some() {
            return Err(malformed("missing act tag field"));
        }
        let rest = rest.trim_start();
        let (speaker_field, rest) = rest
            .split_once(char::is_whitespace)
            .unwrap_or((rest, ""));
        let (speaker, turn) =
            parse_speaker_field(speaker_field).ok_or_else(|| malformed("missing speaker field"))?;

        let mut text = rest.trim_start();
        if let Some((marker, after)) = text.split_once(':') {
            if marker.starts_with("utt") && marker[3..].chars().all(|c| c.is_ascii_digit()) {
                text = after.trim_start();
            }
        }

        records.push(SwdaRecord {
            dialogue_id: dialogue_id.clone(),
            turn_index: records.len(),
            speaker: speaker.to_string(),
            turn,
            raw_tag: tag.to_string(),
            raw_text: text.trim_end().to_string(),
        });
    }
    Ok(records)
}

/// Read and parse an SwDA file; the file stem is the fallback dialogue id.
pub fn read_swda_file(path: &Path) -> Result<Vec<SwdaRecord>, CorpusError> {
    let raw = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_swda_file(&raw, &stem).map_err(|e| e.in_file(path))
}

/// Outcome of turning SwDA records into a labeled dataset.
#[derive(Debug)]
pub struct SwdaConversion {
    pub dataset: Dataset,
    /// Continuation utterances with no earlier same-speaker tag to inherit.
    pub dropped_continuations: usize,
}

/// Convert parsed records (any number of dialogues, each contiguous) into a
/// speech-mode dataset.
///
/// A `+` continuation takes the tag of the same speaker's most recent
/// earlier utterance in the dialogue; when there is none the utterance is
/// dropped and counted.
pub fn records_to_dataset(
    name: &str,
    records: &[SwdaRecord],
    tagset: &TagSet,
) -> Result<SwdaConversion, CorpusError> {
    let mut utterances: Vec<Utterance> = Vec::with_capacity(records.len());
    let mut dropped = 0;
    let mut dialogue_start = 0;
    for rec in records {
        if utterances
            .get(dialogue_start)
            .is_some_and(|u| u.dialogue_id != rec.dialogue_id)
        {
            dialogue_start = utterances.len();
        }
        let tag = match tagset.normalize(&rec.raw_tag) {
            Ok(tag) => tag,
            Err(CorpusError::Continuation) => {
                let inherited = utterances[dialogue_start..]
                    .iter()
                    .rev()
                    .find(|u| u.speaker == rec.speaker)
                    .and_then(|u| u.tag);
                match inherited {
                    Some(tag) => tag,
                    None => {
                        dropped += 1;
                        continue;
                    }
                }
            }
            Err(e) => return Err(e),
        };
        let text = clean_speech_text(&rec.raw_text);
        let tokens = tokenize(&text, TokenizerMode::Speech);
        utterances.push(Utterance {
            dialogue_id: rec.dialogue_id.clone(),
            turn_index: 0,
            speaker: rec.speaker.clone(),
            text,
            tokens,
            tag: Some(tag),
            raw_tag: Some(rec.raw_tag.clone()),
        });
    }
    let dataset = Dataset::new(name, TokenizerMode::Speech, utterances);
    Ok(SwdaConversion {
        dataset,
        dropped_continuations: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE_II: &str = "\
*x*                                                                     *x*
*x*            Copyright (C) 1995 University of Pennsylvania            *x*
FILENAME:\t4325_1632_1519
TOPIC#:\t\t323
=========================================================================

sd          A.1 utt1:  [ I, + I ] don't have any kids. /
sd          A.1 utt2:  I, {F uh, } my sister has a, she just had a baby, /
sd          A.1 utt3:  he's about five months old /
sd          A.1 utt4:  and she was worrying about going back to work and what she was going to do with him and -- /
b           A.1 utt5:  Uh-huh. /
qy          A.1 utt6:  do you have kids? /
na          B.2 utt1:  I have three. /
bh          A.3 utt1:  Oh, really? /
";

    #[test]
    fn parses_single_line() {
        let recs = parse_swda_file("sd A.1 utt1: I don't have any kids. /", "d").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].speaker, "A");
        assert_eq!(recs[0].raw_tag, "sd");
        assert_eq!(recs[0].turn, 1);
        assert_eq!(recs[0].dialogue_id, "d");
        assert_eq!(clean_speech_text(&recs[0].raw_text), "I don't have any kids.");
    }

    #[test]
    fn parses_header_and_body() {
        let recs = parse_swda_file(TABLE_II, "fallback").unwrap();
        let tags: Vec<_> = recs.iter().map(|r| r.raw_tag.as_str()).collect();
        assert_eq!(tags, ["sd", "sd", "sd", "sd", "b", "qy", "na", "bh"]);
        assert!(recs.iter().all(|r| r.dialogue_id == "4325_1632_1519"));
        let idx: Vec<_> = recs.iter().map(|r| r.turn_index).collect();
        assert_eq!(idx, (0..8).collect::<Vec<_>>());
        assert_eq!(recs[6].speaker, "B");
    }

    #[test]
    fn empty_file() {
        assert!(parse_swda_file("", "x").unwrap().is_empty());
        assert!(parse_swda_file("\n\n  \n", "x").unwrap().is_empty());
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let err = parse_swda_file("sd A.1 utt1: fine /\nA.2 utt1: no tag /", "x").unwrap_err();
        match err {
            CorpusError::Parse { line, reason } => {
                assert_eq!(line, 2);
                assert!(reason.contains("tag"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_swda_file("\nsd\n", "x").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
        let err = parse_swda_file("sd hello there", "x").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 1, .. }));
    }

    #[test]
    fn continuation_inherits_same_speaker_tag() {
        let raw = "\
+  B.1 utt1: and then /
qy A.2 utt1: do you have kids? /
sd B.3 utt1: I have, /
b  A.4 utt1: Uh-huh. /
+  B.5 utt1: three. /
";
        let recs = parse_swda_file(raw, "d1").unwrap();
        let conv = records_to_dataset("t", &recs, TagSet::damsl()).unwrap();
        assert_eq!(conv.dropped_continuations, 1);
        let tags: Vec<_> = conv
            .dataset
            .utterances()
            .iter()
            .map(|u| u.tag.unwrap().label())
            .collect();
        assert_eq!(tags, ["qy", "sd", "b", "sd"]);
        assert_eq!(conv.dataset.utterances()[3].raw_tag.as_deref(), Some("+"));
        assert_eq!(conv.dataset.utterances()[3].turn_index, 3);
    }

    #[test]
    fn unknown_tag_is_an_error() {
        let recs = parse_swda_file("zz A.1 utt1: hmm /", "d").unwrap();
        assert!(matches!(
            records_to_dataset("t", &recs, TagSet::damsl()),
            Err(CorpusError::UnknownTag(t)) if t == "zz"
        ));
    }
}

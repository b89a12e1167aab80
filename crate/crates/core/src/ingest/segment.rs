//! Splitting issue comments into utterances.
//!
//! * Fenced code blocks (```` ``` ```` or `~~~`) contribute one utterance per
//!   non-blank line, trimmed; the fence lines themselves are dropped.
//! * Other text splits into paragraphs at blank lines. A paragraph's lines
//!   are joined with single spaces and split after `.`, `?` or `!` (plus any
//!   closing quotes or brackets) when whitespace follows, except inside
//!   inline code spans and after common abbreviations.

const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "approx.", "mr.", "mrs.", "ms.", "dr.", "no.", "fig.",
];

fn is_fence(line: &str) -> Option<&'static str> {
    let t = line.trim_start();
    if t.starts_with("```") {
        Some("```")
    } else if t.starts_with("~~~") {
        Some("~~~")
    } else {
        None
    }
}

/// Utterance texts of one comment body, in order.
pub fn segment_comment(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut paragraph: Vec<&str> = Vec::new();
    let mut fence: Option<&'static str> = None;
    for line in body.lines() {
        match fence {
            Some(open) => {
                if line.trim_start().starts_with(open) {
                    fence = None;
                } else if !line.trim().is_empty() {
                    out.push(line.trim().to_string());
                }
            }
            None => {
                if let Some(open) = is_fence(line) {
                    flush(&mut paragraph, &mut out);
                    fence = Some(open);
                } else if line.trim().is_empty() {
                    flush(&mut paragraph, &mut out);
                } else {
                    paragraph.push(line.trim());
                }
            }
        }
    }
    flush(&mut paragraph, &mut out);
    out
}

fn flush(paragraph: &mut Vec<&str>, out: &mut Vec<String>) {
    if !paragraph.is_empty() {
        out.extend(split_sentences(&paragraph.join(" ")));
        paragraph.clear();
    }
}

fn ends_with_abbreviation(text: &str) -> bool {
    let last = text.rsplit(char::is_whitespace).next().unwrap_or("").to_lowercase();
    let last = last.trim_start_matches(['(', '"', '\'']);
    ABBREVIATIONS.contains(&last)
}

/// Sentence split of one paragraph.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_code = false;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if c == '`' {
            in_code = !in_code;
        } else if !in_code && matches!(c, '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '?' | '!' | '"' | '\'' | ')' | ']') {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            let at_space = j == chars.len() || chars[j].1.is_whitespace();
            if at_space && j < chars.len() && !ends_with_abbreviation(&text[start..end]) {
                push_trimmed(&text[start..end], &mut out);
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push_trimmed(&text[start..], &mut out);
    out
}

fn push_trimmed(s: &str, out: &mut Vec<String>) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t.to_string());
    }
}

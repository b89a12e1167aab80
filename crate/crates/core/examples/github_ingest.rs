//! Fetch issue threads through a recorded-response transport, segment the
//! comments into utterances and build an unlabeled dataset.

use std::path::Path;

use dialogue_acts::ingest::{comments_to_dataset, segment_comment, Client, FixtureTransport, IssueRef};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/github_responses.json");
    let transport = FixtureTransport::load(&fixture)?;
    let client = Client::new(&transport);

    let issues: Vec<IssueRef> = ["octo/widgets#101", "octo/widgets#103"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let threads = client.fetch_issues(&issues, 4)?;
    let comments: Vec<_> = threads.into_iter().flatten().collect();
    println!("{} comments in {} requests", comments.len(), transport.request_count());

    for c in &comments[..2] {
        println!("\n[{} by {}]", c.comment_id, c.author);
        for utt in segment_comment(&c.body) {
            println!("  | {utt}");
        }
    }

    let dataset = comments_to_dataset("issues", &comments);
    println!();
    for u in dataset.utterances() {
        println!("{:<18} {:>2} {:<6} {:?}", u.dialogue_id, u.turn_index, u.speaker, u.tokens);
    }

    match client.fetch_issue_comments(&"octo/widgets#404".parse()?) {
        Err(e) => println!("\nmissing issue: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

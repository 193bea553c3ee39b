//! The guide and its doc-test harness list the same chapters.

use std::path::Path;

fn book_src() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../book/src"))
}

fn summary_chapters() -> Vec<String> {
    let summary = std::fs::read_to_string(book_src().join("SUMMARY.md")).unwrap();
    summary
        .lines()
        .filter_map(|l| {
            l.split_once("](")
                .map(|(_, rest)| rest.trim_end_matches(')').to_string())
        })
        .collect()
}

#[test]
fn every_chapter_is_doc_tested() {
    let lib = include_str!("../src/lib.rs");
    let chapters = summary_chapters();
    assert!(!chapters.is_empty());
    for ch in &chapters {
        assert!(book_src().join(ch).is_file(), "{ch} listed but missing");
        assert!(
            lib.contains(&format!("book/src/{ch}\")")),
            "{ch} not included in the harness"
        );
    }
}

#[test]
fn every_chapter_file_is_listed() {
    let chapters = summary_chapters();
    for entry in std::fs::read_dir(book_src()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".md") && name != "SUMMARY.md" {
            assert!(chapters.contains(&name), "{name} not in SUMMARY.md");
        }
    }
}

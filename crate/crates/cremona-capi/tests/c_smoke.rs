//! Compile and run a small C program against the generated header and the
//! static library, exercising the ABI end to end. Skipped when no C compiler
//! is available.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "cremona.h"

int main(void) {
    const char *json =
        "{\"surface\":\"plane\",\"class\":{\"degree\":6},"
        "\"points\":[{\"id\":\"n\",\"mult\":2},{\"id\":\"t1\",\"mult\":2},"
        "{\"id\":\"t2\",\"mult\":2,\"parent\":\"t1\"}]}";
    CremonaDocument *doc = NULL;
    if (cremona_document_parse(json, &doc) != CREMONA_STATUS_OK) {
        fprintf(stderr, "parse failed: %s\n", cremona_last_error());
        return 1;
    }
    char *genus = NULL;
    if (cremona_genus(doc, &genus) != CREMONA_STATUS_OK) {
        fprintf(stderr, "genus failed: %s\n", cremona_last_error());
        return 1;
    }
    if (strcmp(genus, "7/1") != 0) {
        fprintf(stderr, "unexpected genus %s\n", genus);
        return 1;
    }
    cremona_string_free(genus);

    char *models = NULL;
    if (cremona_standard_model(doc, true, 64, &models) != CREMONA_STATUS_OK) {
        fprintf(stderr, "standard model failed: %s\n", cremona_last_error());
        return 1;
    }
    if (strstr(models, "\"truncated\": false") == NULL) {
        fprintf(stderr, "missing enumeration flag in %s\n", models);
        return 1;
    }
    cremona_string_free(models);
    cremona_document_free(doc);

    CremonaDocument *bad = NULL;
    if (cremona_document_parse("{\"surface\":\"plane\"}", &bad)
            != CREMONA_STATUS_PARSE_ERROR) {
        fprintf(stderr, "bad document accepted\n");
        return 1;
    }
    printf("c-smoke ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let cc = match ["cc", "gcc", "clang"]
        .iter()
        .find(|name| Command::new(name).arg("--version").output().is_ok())
    {
        Some(cc) => *cc,
        None => {
            eprintln!("skipping: no C compiler found");
            return;
        }
    };

    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    // The staticlib is produced next to this test's own artifacts, either in
    // the profile directory or under deps/.
    let mut deps_dir = std::env::current_exe().unwrap();
    deps_dir.pop();
    let profile_dir = deps_dir.parent().map(PathBuf::from).unwrap_or_default();
    let staticlib = [deps_dir, profile_dir]
        .iter()
        .map(|d| d.join("libcremona_capi.a"))
        .find(|p| p.exists())
        .expect("static library not found next to the test binary");

    let dir = std::env::temp_dir().join(format!("cremona-c-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let source = dir.join("smoke.c");
    let binary = dir.join("smoke");
    std::fs::write(&source, C_PROGRAM).unwrap();

    let compile = Command::new(cc)
        .arg(&source)
        .arg(&staticlib)
        .arg(format!("-I{}", include.display()))
        .arg("-o")
        .arg(&binary)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .expect("compiler runs");
    assert!(
        compile.status.success(),
        "compilation failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("smoke binary runs");
    assert!(
        run.status.success(),
        "smoke run failed: {}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).contains("c-smoke ok"));
    std::fs::remove_dir_all(&dir).ok();
}

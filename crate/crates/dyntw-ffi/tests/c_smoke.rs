//! Compiles and runs a small C program against include/dyntw.h and the
//! staticlib, proving the shipped header and archive actually link.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "dyntw.h"

int main(void) {
    DyntwSession *s = NULL;
    if (dyntw_session_new(6, 2, &s) != DYNTW_STATUS_OK) return 10;

    if (dyntw_add_edge(s, 0, 1) != DYNTW_STATUS_OK) return 11;
    if (dyntw_add_edge(s, 1, 2) != DYNTW_STATUS_OK) return 12;
    if (dyntw_add_edge(s, 0, 2) != DYNTW_STATUS_OK) return 13;
    if (dyntw_add_edge(s, 0, 1) != DYNTW_STATUS_DUPLICATE_EDGE) return 14;
    if (dyntw_last_error(s) == NULL) return 15;

    char *ans = NULL;
    if (dyntw_query(s, "mis", &ans) != DYNTW_STATUS_OK) return 16;
    printf("mis=%s\n", ans);
    dyntw_string_free(ans);

    if (dyntw_query(s, "color2", &ans) != DYNTW_STATUS_OK) return 17;
    printf("color2=%s\n", ans);
    dyntw_string_free(ans);

    uint64_t width = 0;
    if (dyntw_width(s, &width) != DYNTW_STATUS_OK) return 18;
    printf("width=%llu\n", (unsigned long long)width);

    if (dyntw_delete_edge(s, 4, 5) != DYNTW_STATUS_MISSING_EDGE) return 19;
    if (dyntw_selfcheck(s) != DYNTW_STATUS_OK) return 20;

    dyntw_session_free(s);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from the package root; the workspace target dir is the
    // standard layout unless CARGO_TARGET_DIR points elsewhere
    if let Ok(dir) = std::env::var("CARGO_TARGET_DIR") {
        return PathBuf::from(dir);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target")
}

#[test]
fn c_program_links_and_runs() {
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    let archive = target_dir().join(profile).join("libdyntw_ffi.a");
    assert!(
        archive.exists(),
        "staticlib missing at {}",
        archive.display()
    );
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");

    let dir = std::env::temp_dir().join("dyntw-ffi-c-smoke");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();

    let cc = Command::new("cc")
        .arg(&src)
        .arg(&archive)
        .arg("-I")
        .arg(&include)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .expect("run cc");
    assert!(
        cc.status.success(),
        "cc failed:\n{}",
        String::from_utf8_lossy(&cc.stderr)
    );

    let run = Command::new(&bin).output().expect("run smoke binary");
    assert_eq!(
        run.status.code(),
        Some(0),
        "smoke binary failed: {:?}\nstdout: {}",
        run.status,
        String::from_utf8_lossy(&run.stdout)
    );
    let out = String::from_utf8(run.stdout).unwrap();
    // triangle plus three isolated vertices
    assert!(out.contains("mis=4"), "unexpected output {out:?}");
    assert!(out.contains("color2=false"), "unexpected output {out:?}");
    let width: u64 = out
        .lines()
        .find_map(|l| l.strip_prefix("width="))
        .expect("width line")
        .parse()
        .unwrap();
    assert!(width >= 2, "a triangle forces width 2, got {width}");
    assert!(width <= 26, "width {width} above the promised bound");
}

//! Regenerates the C header from the extern surface. The header is
//! written to OUT_DIR and its path exported as DYNTW_HEADER_GEN; a
//! test compares it against the committed include/dyntw.h so a stale
//! header fails loudly instead of silently drifting.

use std::env;
use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    let out = PathBuf::from(env::var("OUT_DIR").expect("OUT_DIR")).join("dyntw.h");
    let config = cbindgen::Config::from_file(PathBuf::from(&crate_dir).join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation")
        .write_to_file(&out);
    println!("cargo:rustc-env=DYNTW_HEADER_GEN={}", out.display());
}

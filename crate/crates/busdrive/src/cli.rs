//! Command-line front end. See the crate README for usage.

pub fn run() -> i32 {
    eprintln!("not yet wired");
    1
}

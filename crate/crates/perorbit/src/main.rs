fn main() { println!("{}", perorbit_core::smoke()); }

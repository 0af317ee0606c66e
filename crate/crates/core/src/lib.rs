//! Last-mile repair engines for formula languages.

pub mod bench;
pub mod demo;
pub mod dss;
pub mod editdist;
pub mod grammar;
pub mod lexer;
pub mod localize;
pub mod parse;
pub mod plist;
pub mod rank;
pub mod search;
pub mod sets;

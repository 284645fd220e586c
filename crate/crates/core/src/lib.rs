pub mod bench;
pub mod controllers;
pub mod fuzzy;
pub mod plant;
pub mod published;
pub mod runner;

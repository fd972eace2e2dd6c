//! Simulator-backed Internet teleoperation platform for a multi-sensor mobile robot.
//!
//! The crate is organised the way the running system is:
//!
//! * [`world`] and [`sensors`] simulate the robot, its drive and its sensors;
//! * [`wire`] defines every message and the three channel disciplines;
//! * [`netsim`] impairs traffic with delay, jitter, loss and blackouts;
//! * [`fuzzy`] holds the Mamdani engine and the on-board safety controllers;
//! * [`server`] is the robot-side central server, [`client`] the operator side;
//! * [`sim`] wires server, client and two impaired pipes onto one virtual clock.

pub mod client;
pub mod fuzzy;
pub mod geometry;
pub mod netsim;
pub mod sensors;
pub mod server;
pub mod sim;
pub mod wire;
pub mod world;

pub use geometry::Vec2;
pub use world::{Pose2D, Twist};

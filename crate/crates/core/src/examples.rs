//! The running Rooms example: a robot at L3 must grab O1 (in L1) and O2 (in L2).

pub const ROOMS_DOMAIN: &str = "\
(define (domain rooms)
  (:requirements :strips :typing)
  (:types room obj)
  (:predicates
    (at-robot ?l - room)
    (at-object ?o - obj ?l - room)
    (prepared ?o - obj)
    (holding ?o - obj))
  (:action move
    :parameters (?l1 ?l2 - room)
    :precondition (at-robot ?l1)
    :effect (and (at-robot ?l2) (not (at-robot ?l1))))
  (:action prepare
    :parameters (?o - obj ?l - room)
    :precondition (and (at-object ?o ?l) (at-robot ?l))
    :effect (prepared ?o))
  (:action grasp
    :parameters (?o - obj ?l - room)
    :precondition (and (at-object ?o ?l) (at-robot ?l) (prepared ?o))
    :effect (and (holding ?o) (not (at-object ?o ?l)))))
";

pub const EXAMPLE_PROBLEM: &str = "\
(define (problem example)
  (:domain rooms)
  (:objects L1 L2 L3 - room O1 O2 - obj)
  (:init (at-robot L3) (at-object O1 L1) (at-object O2 L2))
  (:goal (and (holding O1) (holding O2))))
";

/// The plan shown for the example, in display form.
pub const EXAMPLE_PLAN: [&str; 6] = [
    "move(L3, L1)",
    "prepare(O1, L1)",
    "grasp(O1, L1)",
    "move(L1, L2)",
    "prepare(O2, L2)",
    "grasp(O2, L2)",
];

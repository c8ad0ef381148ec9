use rand::seq::IndexedRandom;
use rand::Rng;

use super::geometry::{Geometry, Point2};
use super::Participant;

/// Longest straight move evaluated at once; smaller than any street width.
const SUBSTEP_M: f64 = 1.0;

/// Advances every participant along its street for `dt_s` seconds.
///
/// Direction is re-drawn among the open street directions on entering an
/// intersection or when the next substep would hit a building or leave the
/// grid. Speed is preserved.
pub fn step_mobility<R: Rng + ?Sized>(
    participants: &mut [Participant],
    dt_s: f64,
    geometry: &Geometry,
    rng: &mut R,
) {
    if dt_s <= 0.0 {
        return;
    }
    for p in participants.iter_mut() {
        let speed = p.velocity.norm();
        if speed == 0.0 {
            continue;
        }
        let mut dir = Point2::new(p.velocity.x / speed, p.velocity.y / speed);
        let mut remaining = speed * dt_s;
        let mut in_crossing = geometry.is_intersection(p.position);
        let mut blocked = 0;
        while remaining > 0.0 {
            let step = remaining.min(SUBSTEP_M);
            let next = p.position.offset(dir, step);
            if !geometry.is_street(next) {
                blocked += 1;
                if blocked > 8 {
                    break;
                }
                let open = geometry.open_directions(p.position);
                let choices: Vec<Point2> = if open.is_empty() {
                    super::geometry::AXIS_DIRECTIONS
                        .iter()
                        .copied()
                        .filter(|&d| geometry.is_street(p.position.offset(d, step)))
                        .collect()
                } else {
                    open
                };
                match choices.choose(rng) {
                    Some(&d) => dir = d,
                    None => break,
                }
                continue;
            }
            blocked = 0;
            p.position = next;
            remaining -= step;
            let now_crossing = geometry.is_intersection(p.position);
            if now_crossing && !in_crossing {
                let open = geometry.open_directions(p.position);
                if let Some(&d) = open.choose(rng) {
                    dir = d;
                }
            }
            in_crossing = now_crossing;
        }
        p.velocity = Point2::new(dir.x * speed, dir.y * speed);
    }
}

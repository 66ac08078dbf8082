//! Detours, small detours, local quasi-geodesics, and membership in the
//! geometric language over a graph fragment.

use crate::graph::Fragment;
use crate::group::{FactorElement, FpElement, FreeProduct, Letter};
use crate::lang::constants::GeometryConstants;
use crate::{RhError, Result};

/// Per-factor sector sets `Sec_k(θ)` at a fixed angle bound.
#[derive(Debug, Clone)]
pub struct SectorTable {
    pub theta: usize,
    /// `sectors[k-1]` lists the canonical elements of `Sec_k(theta)`.
    pub sectors: Vec<Vec<FactorElement>>,
}

impl SectorTable {
    /// Compute all sectors over the fragment at angle bound `theta`.
    pub fn compute(frag: &Fragment, theta: usize) -> Result<SectorTable> {
        let q = frag.presentation().parabolics().len();
        let mut sectors = Vec::with_capacity(q);
        for k in 1..=q {
            sectors.push(frag.sector(k, theta)?);
        }
        Ok(SectorTable { theta, sectors })
    }

    pub fn contains(&self, fe: &FactorElement) -> bool {
        self.sectors.get(fe.factor.wrapping_sub(1)).is_some_and(|s| s.contains(fe))
    }
}

/// One detour in a long normal form: the body occupies letter positions
/// `body_start..=body_end`, flanked by parabolic letters of `factor`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detour {
    pub body_start: usize,
    pub body_end: usize,
    pub factor: usize,
    /// Path length of the body in the coned-off graph.
    pub len: usize,
    /// All body letters lie in the free factor or in the given small-angle
    /// sectors.
    pub small: bool,
}

/// Find every detour of the long normal form `letters`: subwords flanked by
/// two parabolic letters of the same factor outside `sec_theta`, whose image
/// in the base group lies in that factor.  Smallness is judged against
/// `sec_small`.
pub fn find_detours(
    frag: &Fragment,
    letters: &[Letter],
    sec_theta: &SectorTable,
    sec_small: &SectorTable,
) -> Result<Vec<Detour>> {
    let mut out = Vec::new();
    let outside = |l: &Letter| -> Option<usize> {
        match l {
            Letter::Par(fe) if !sec_theta.contains(fe) => Some(fe.factor),
            _ => None,
        }
    };
    for f1 in 0..letters.len() {
        let Some(k) = outside(&letters[f1]) else { continue };
        for f2 in f1 + 2..letters.len() {
            match &letters[f2] {
                Letter::Par(fe) if fe.factor == k && !sec_theta.contains(fe) => {}
                _ => continue,
            }
            let body = &letters[f1 + 1..f2];
            if !body_projects_into_factor(frag, body, k)? {
                continue;
            }
            let small = body.iter().all(|l| match l {
                Letter::Gen(_) => true,
                Letter::Par(fe) => sec_small.contains(fe),
            });
            out.push(Detour {
                body_start: f1 + 1,
                body_end: f2 - 1,
                factor: k,
                len: FreeProduct::letter_path_len(body),
                small,
            });
        }
    }
    Ok(out)
}

/// Does the image of the letter sequence in the base group lie in parabolic
/// factor `k`?  Factor elements are no longer than their representing words,
/// so a ball of that radius is an exhaustive search space.
pub fn body_projects_into_factor(frag: &Fragment, body: &[Letter], k: usize) -> Result<bool> {
    let pres = frag.presentation();
    let fp = frag.free_product();
    let nf = frag.oracle();
    let word = pres.project_relword(&body.to_vec())?;
    let image = nf.normal_form(&word);
    for h in fp.factor_ball(k, image.len())? {
        let hw = pres.project_syllable(&h)?;
        if nf.normal_form(&hw) == image {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Membership tester for the geometric language over a fragment, with the
/// sector tables precomputed at the detour bound and the smallness bound.
pub struct LangTester<'a> {
    frag: &'a Fragment,
    consts: GeometryConstants,
    sec_theta: SectorTable,
    sec_small: SectorTable,
}

fn to_usize(x: u128, what: &str) -> Result<usize> {
    usize::try_from(x).map_err(|_| RhError::BudgetExceeded(format!("{what} overflows usize")))
}

impl<'a> LangTester<'a> {
    pub fn new(frag: &'a Fragment, consts: &GeometryConstants) -> Result<LangTester<'a>> {
        let theta = to_usize(consts.theta, "theta")?;
        let small = to_usize(consts.small_detour_bound(consts.l2p), "smallness bound")?;
        Ok(LangTester {
            frag,
            consts: consts.clone(),
            sec_theta: SectorTable::compute(frag, theta)?,
            sec_small: SectorTable::compute(frag, small)?,
        })
    }

    pub fn constants(&self) -> &GeometryConstants {
        &self.consts
    }

    pub fn fragment(&self) -> &Fragment {
        self.frag
    }

    /// Sector table at the detour angle bound.
    pub fn sector_theta(&self) -> &SectorTable {
        &self.sec_theta
    }

    /// Sector table at the detour smallness bound.
    pub fn sector_small(&self) -> &SectorTable {
        &self.sec_small
    }

    /// Does the element have a small detour of bounded length (the local
    /// obstruction that characterizes non-membership)?
    pub fn has_small_detour(&self, a: &FpElement) -> Result<bool> {
        let letters = self.frag.free_product().long_normal_form(a);
        let l2p = to_usize(self.consts.l2p, "l2'")?;
        let detours = find_detours(self.frag, &letters, &self.sec_theta, &self.sec_small)?;
        Ok(detours.iter().any(|d| d.small && d.len <= l2p))
    }

    /// Is the labeled path an `L`-local `(L1,L2)`-quasi-geodesic?  Every
    /// subpath of length at most `L` must satisfy
    /// `length <= L1 * d(endpoints) + L2`.
    pub fn is_local_quasigeodesic(&self, a: &FpElement) -> Result<bool> {
        let path = self.frag.path_of(a)?;
        let l = to_usize(self.consts.l, "l")?;
        let verts = &path.vertices;
        // subpaths of length <= l must have true geodesics inside the
        // fragment, which needs slack below the fragment radius
        for &v in verts {
            if self.frag.vertex_depth(v) + l.min(verts.len()) > self.frag.radius() {
                return Err(RhError::FragmentTooSmall {
                    required: (self.frag.vertex_depth(v) + l.min(verts.len())) as u32,
                });
            }
        }
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                let len = (j - i) as u128;
                if len > self.consts.l {
                    break;
                }
                let d = self
                    .frag
                    .distance(verts[i], verts[j])
                    .ok_or(RhError::Structural("fragment is disconnected".into()))?
                    as u128;
                if len > self.consts.l1 * d + self.consts.l2 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Membership in the geometric language: no bounded small detour, and
    /// locally quasi-geodesic.
    pub fn in_language(&self, a: &FpElement) -> Result<bool> {
        Ok(!self.has_small_detour(a)? && self.is_local_quasigeodesic(a)?)
    }

    /// Enumerate the trivial-image sublanguage: elements of the language
    /// whose image in the base group is trivial, searched over letters drawn
    /// from the generators and factor balls of radius `letter_ball`, up to
    /// the given path length.  The search is complete for that letter
    /// universe; a larger universe may reveal more elements.
    pub fn trivial_sublanguage(
        &self,
        letter_ball: usize,
        max_path_len: usize,
    ) -> Result<Vec<FpElement>> {
        let pres = self.frag.presentation();
        let fp = self.frag.free_product();
        let nf = self.frag.oracle();
        let mut letters: Vec<Letter> = pres.alphabet()?;
        for k in 1..=pres.parabolics().len() {
            for fe in fp.factor_ball(k, letter_ball)? {
                letters.push(Letter::Par(fe));
            }
        }
        letters.sort();
        letters.dedup();
        let mut out = Vec::new();
        // depth-first over letter sequences in long normal form
        let mut stack: Vec<(Vec<Letter>, usize)> = vec![(Vec::new(), 0)];
        while let Some((prefix, used)) = stack.pop() {
            let a = fp.from_letters(&prefix)?;
            // only consider sequences that stayed in long normal form
            if fp.path_len(&a) == used {
                let word = pres.project_relword(&prefix)?;
                if nf.normal_form(&word).is_empty() && self.in_language(&a)? {
                    out.push(a);
                }
                for l in &letters {
                    let cost = FreeProduct::letter_path_len(std::slice::from_ref(l));
                    if used + cost <= max_path_len {
                        let mut next = prefix.clone();
                        next.push(l.clone());
                        stack.push((next, used + cost));
                    }
                }
            }
        }
        out.sort_by_key(|a| (self.frag.free_product().path_len(a), format!("{a:?}")));
        out.dedup_by(|a, b| a == b);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Fragment;
    use crate::group::{parse_presentation, word_to_syllables, GroupFamily, Word};
    use crate::lang::constants::GeometryConstants;

    const FREE: &str = "
[group]
generators = a, b
";

    const Z_WITH_Z_PARABOLIC: &str = "
[group]
generators = a
[parabolic.P]
kind = free-abelian
rank = 1
gens = p
embed p = a
";

    fn toy() -> GeometryConstants {
        GeometryConstants::toy(1, 2, 3, 2, 50).unwrap()
    }

    #[test]
    fn free_group_language_is_everything_reduced() {
        let pres = parse_presentation(FREE).unwrap();
        let (_, nf) = GroupFamily::Free.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 5, 4).unwrap();
        let consts = toy();
        let tester = LangTester::new(&frag, &consts).unwrap();
        let fp = frag.free_product();
        for s in ["a", "ab", "aB", "ba"] {
            let a = fp
                .normalize(&word_to_syllables(fp, &Word::parse(s).unwrap()).unwrap())
                .unwrap();
            assert!(tester.in_language(&a).unwrap(), "{s} should be geometric");
        }
    }

    #[test]
    fn trivial_sublanguage_of_free_group_is_identity() {
        let pres = parse_presentation(FREE).unwrap();
        let (_, nf) = GroupFamily::Free.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 6, 4).unwrap();
        let consts = toy();
        let tester = LangTester::new(&frag, &consts).unwrap();
        let l0 = tester.trivial_sublanguage(2, 2).unwrap();
        assert_eq!(l0.len(), 1);
        assert!(l0[0].is_identity());
    }

    #[test]
    fn detour_detection_in_distorted_letter_sequence() {
        // Z with Z itself as parabolic: p projects to a, so the sequence
        // p(2) a(-1) a(-1) p(2) has the body aa projecting into the factor
        let pres = parse_presentation(Z_WITH_Z_PARABOLIC).unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 6, 6).unwrap();
        let fp = frag.free_product();
        let letters = vec![
            Letter::Par(FactorElement::abelian(1, vec![2])),
            Letter::Gen(crate::group::GenSymbol::neg("a")),
            Letter::Gen(crate::group::GenSymbol::neg("a")),
            Letter::Par(FactorElement::abelian(1, vec![2])),
        ];
        // sector at angle 0 is empty, so both flanks are outside it
        let sec0 = SectorTable { theta: 0, sectors: vec![vec![]] };
        let sec_small = SectorTable::compute(&frag, 50).unwrap();
        let detours = find_detours(&frag, &letters, &sec0, &sec_small).unwrap();
        assert_eq!(detours.len(), 1);
        assert_eq!(detours[0].body_start, 1);
        assert_eq!(detours[0].body_end, 2);
        assert_eq!(detours[0].factor, 1);
        assert_eq!(detours[0].len, 2);
        assert!(detours[0].small, "letters of the free factor are always small");
        let _ = fp;
    }

    #[test]
    fn no_detour_without_matching_flanks() {
        let pres = parse_presentation(Z_WITH_Z_PARABOLIC).unwrap();
        let (_, nf) = GroupFamily::FreeAbelian.oracles(pres.gens()).unwrap();
        let frag = Fragment::explore(&pres, &nf, 6, 6).unwrap();
        let letters = vec![
            Letter::Par(FactorElement::abelian(1, vec![2])),
            Letter::Gen(crate::group::GenSymbol::pos("a")),
        ];
        let sec0 = SectorTable { theta: 0, sectors: vec![vec![]] };
        let sec_small = SectorTable::compute(&frag, 50).unwrap();
        assert!(find_detours(&frag, &letters, &sec0, &sec_small).unwrap().is_empty());
    }
}

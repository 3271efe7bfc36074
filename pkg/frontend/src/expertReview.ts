/**
 * State machine behind the expert review screen.
 *
 * The rubric is presented in order: relevance, correctness, grade level,
 * similarity, skill level, then the three per-distractor criteria. A No
 * on relevance or correctness locks everything after it and auto-fills NA;
 * when both gates are Yes, every later item must be answered before the
 * form can be submitted.
 */

import { AnnotationPayload, DistractorTriple, SkillName, TriState } from "./types";
import { validateAnnotation } from "./validation";

export const RUBRIC_ORDER = [
  "relevance",
  "correctness",
  "grade_level",
  "similarity",
  "blooms_level",
  "distractor_plausibility",
  "distractor_misconception",
  "distractor_independence",
] as const;

export type RubricItem = (typeof RUBRIC_ORDER)[number];

export type DistractorCriterion = "plausibility" | "misconception" | "independence";

type YesNo = "yes" | "no";

interface DistractorDraft {
  plausibility: YesNo | null;
  misconception: YesNo | null;
  independence: YesNo | null;
}

function emptyTriple(): DistractorDraft {
  return { plausibility: null, misconception: null, independence: null };
}

export class ReviewForm {
  private relevance: YesNo | null = null;
  private correctness: YesNo | null = null;
  private gradeLevel: YesNo | null = null;
  private similarity: YesNo | null = null;
  private blooms: SkillName | null = null;
  private distractors: [DistractorDraft, DistractorDraft, DistractorDraft] = [
    emptyTriple(),
    emptyTriple(),
    emptyTriple(),
  ];

  /** A No on either gate voids everything after it. */
  gated(): boolean {
    return this.relevance === "no" || this.correctness === "no";
  }

  /** Whether a control is greyed out (auto-NA) under the current gates. */
  isLocked(item: RubricItem): boolean {
    if (item === "relevance") return false;
    if (item === "correctness") return this.relevance !== "yes";
    return this.gated() || this.relevance === null || this.correctness === null;
  }

  setRelevance(value: YesNo): void {
    if (this.relevance !== value) {
      // flipping the first gate invalidates everything downstream
      this.correctness = null;
      this.clearLater();
    }
    this.relevance = value;
  }

  setCorrectness(value: YesNo): void {
    this.assertUnlocked("correctness");
    if (this.correctness !== value) {
      this.clearLater();
    }
    this.correctness = value;
  }

  setGradeLevel(value: YesNo): void {
    this.assertUnlocked("grade_level");
    this.gradeLevel = value;
  }

  setSimilarity(value: YesNo): void {
    this.assertUnlocked("similarity");
    this.similarity = value;
  }

  setBlooms(level: SkillName): void {
    this.assertUnlocked("blooms_level");
    this.blooms = level;
  }

  setDistractor(slot: 0 | 1 | 2, criterion: DistractorCriterion, value: YesNo): void {
    this.assertUnlocked(
      criterion === "plausibility"
        ? "distractor_plausibility"
        : criterion === "misconception"
          ? "distractor_misconception"
          : "distractor_independence",
    );
    this.distractors[slot][criterion] = value;
  }

  /** Submit stays disabled until every non-NA item is answered. */
  canSubmit(): boolean {
    if (this.relevance === null) return false;
    if (this.relevance === "no") return true;
    if (this.correctness === null) return false;
    if (this.correctness === "no") return true;
    return (
      this.gradeLevel !== null &&
      this.similarity !== null &&
      this.blooms !== null &&
      this.distractors.every(
        (d) => d.plausibility !== null && d.misconception !== null && d.independence !== null,
      )
    );
  }

  buildPayload(): AnnotationPayload {
    if (!this.canSubmit()) {
      throw new Error("every item that is not auto-NA must be answered before submitting");
    }
    const gated = this.gated();
    const na: TriState = "na";
    const triple = (d: DistractorDraft): DistractorTriple =>
      gated
        ? { plausibility: na, misconception: na, independence: na }
        : {
            plausibility: d.plausibility!,
            misconception: d.misconception!,
            independence: d.independence!,
          };
    const payload: AnnotationPayload = {
      relevance: this.relevance!,
      correctness: this.relevance === "no" ? "na" : this.correctness!,
      grade_level: gated ? na : this.gradeLevel!,
      similarity: gated ? na : this.similarity!,
      blooms_level: gated ? null : this.blooms,
      distractors: [
        triple(this.distractors[0]),
        triple(this.distractors[1]),
        triple(this.distractors[2]),
      ],
    };
    const problems = validateAnnotation(payload);
    if (problems.length > 0) {
      throw new Error(`annotation failed local validation: ${problems.join("; ")}`);
    }
    return payload;
  }

  private clearLater(): void {
    this.gradeLevel = null;
    this.similarity = null;
    this.blooms = null;
    this.distractors = [emptyTriple(), emptyTriple(), emptyTriple()];
  }

  private assertUnlocked(item: RubricItem): void {
    if (this.isLocked(item)) {
      throw new Error(`${item} is disabled under the current gate answers`);
    }
  }
}

/**
 * Side-by-side view of the two raters' skill labels for the out-of-band
 * consensus step; disagreements are surfaced, never auto-resolved.
 */
export function bloomsComparison(
  first: AnnotationPayload,
  second: AnnotationPayload,
): { first: SkillName | null; second: SkillName | null; agree: boolean } {
  return {
    first: first.blooms_level,
    second: second.blooms_level,
    agree:
      first.blooms_level !== null &&
      second.blooms_level !== null &&
      first.blooms_level === second.blooms_level,
  };
}

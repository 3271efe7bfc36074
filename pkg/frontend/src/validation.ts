/**
 * Client-side mirror of the service's submission rules.
 *
 * The UI validates every payload against these before it leaves the
 * browser, so a form that passes here is a form the service accepts.
 * Keep in lockstep with the server's wire models and rubric cascade.
 */

import {
  AnnotationPayload,
  Difficulty,
  OptionLabel,
  ResponseRow,
  SKILL_NAMES,
  TriState,
} from "./types";

const LABELS: readonly string[] = ["A", "B", "C", "D"];
const DIFFICULTIES: readonly number[] = [1, 3, 5];
const TRI: readonly string[] = ["yes", "no", "na"];

export function isOptionLabel(v: unknown): v is OptionLabel {
  return typeof v === "string" && LABELS.includes(v);
}

export function isDifficulty(v: unknown): v is Difficulty {
  return typeof v === "number" && DIFFICULTIES.includes(v);
}

export function validateResponseRow(row: ResponseRow): string[] {
  const problems: string[] = [];
  if (!row.question_id) {
    problems.push("question_id must be non-empty");
  }
  if (row.answer_label !== undefined && !isOptionLabel(row.answer_label)) {
    problems.push(`answer_label must be A-D, got ${JSON.stringify(row.answer_label)}`);
  }
  if (row.difficulty !== undefined && !isDifficulty(row.difficulty)) {
    problems.push(`difficulty must be 1, 3, or 5, got ${row.difficulty}`);
  }
  if (row.attempted) {
    if (row.answer_label === undefined) {
      problems.push("attempted responses need an answer_label");
    }
    if (row.difficulty === undefined) {
      problems.push("attempted responses need a difficulty rating");
    }
  } else {
    if (row.answer_label !== undefined) {
      problems.push("an unattempted response cannot carry an answer");
    }
    if (row.guessed) {
      problems.push("an unattempted response cannot be a guess");
    }
  }
  if (row.response_time_s !== undefined && row.response_time_s < 0) {
    problems.push("response_time_s cannot be negative");
  }
  return problems;
}

export function validateSubmission(rows: ResponseRow[]): string[] {
  const problems: string[] = [];
  if (rows.length === 0) {
    problems.push("a submission needs at least one row");
  }
  const seen = new Set<string>();
  rows.forEach((row, i) => {
    for (const p of validateResponseRow(row)) {
      problems.push(`row ${i}: ${p}`);
    }
    if (seen.has(row.question_id)) {
      problems.push(`row ${i}: duplicate question ${row.question_id}`);
    }
    seen.add(row.question_id);
  });
  return problems;
}

function isTri(v: unknown): v is TriState {
  return typeof v === "string" && TRI.includes(v);
}

/**
 * Mirror of the rubric cascade: relevance and correctness gate the rest.
 * A No on either gate forces every later item to NA; two Yes gates
 * forbid NA everywhere after them.
 */
export function validateAnnotation(a: AnnotationPayload): string[] {
  const problems: string[] = [];
  if (a.relevance !== "yes" && a.relevance !== "no") {
    problems.push("relevance is the first gate and must be yes or no");
  }
  for (const [name, value] of [
    ["correctness", a.correctness],
    ["grade_level", a.grade_level],
    ["similarity", a.similarity],
  ] as const) {
    if (!isTri(value)) {
      problems.push(`${name} must be yes, no, or na`);
    }
  }
  if (a.blooms_level !== null && !SKILL_NAMES.includes(a.blooms_level)) {
    problems.push(`blooms_level must be a skill name or null, got ${a.blooms_level}`);
  }
  if (a.distractors.length !== 3) {
    problems.push("exactly three distractor ratings are required");
  }
  for (const d of a.distractors) {
    for (const v of [d.plausibility, d.misconception, d.independence]) {
      if (!isTri(v)) {
        problems.push("distractor ratings must be yes, no, or na");
      }
    }
  }

  if (a.relevance === "no" && a.correctness !== "na") {
    problems.push("correctness must be NA when relevance is No");
  }
  if (a.relevance === "yes" && a.correctness === "na") {
    problems.push("correctness cannot be NA when relevance is Yes");
  }
  const gated = a.relevance === "no" || a.correctness === "no";
  const allSlotsNA = a.distractors.every(
    (d) => d.plausibility === "na" && d.misconception === "na" && d.independence === "na",
  );
  const anySlotNA = a.distractors.some(
    (d) => d.plausibility === "na" || d.misconception === "na" || d.independence === "na",
  );
  if (gated) {
    if (a.grade_level !== "na") problems.push("grade_level must be NA once a gate item is No");
    if (a.similarity !== "na") problems.push("similarity must be NA once a gate item is No");
    if (a.blooms_level !== null) problems.push("blooms_level must be NA once a gate item is No");
    if (!allSlotsNA) problems.push("distractors must be NA once a gate item is No");
  } else {
    if (a.grade_level === "na") problems.push("grade_level cannot be NA when both gates are Yes");
    if (a.similarity === "na") problems.push("similarity cannot be NA when both gates are Yes");
    if (a.blooms_level === null) problems.push("blooms_level cannot be NA when both gates are Yes");
    if (anySlotNA) problems.push("distractor ratings cannot be NA when both gates are Yes");
  }
  return problems;
}

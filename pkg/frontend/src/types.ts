/** Wire types for the conceptmcq service routes this client consumes. */

export type OptionLabel = "A" | "B" | "C" | "D";

export type Difficulty = 1 | 3 | 5;

export type TriState = "yes" | "no" | "na";

export type SkillName =
  | "remember"
  | "understand"
  | "apply"
  | "analyze"
  | "evaluate"
  | "create";

export const SKILL_NAMES: readonly SkillName[] = [
  "remember",
  "understand",
  "apply",
  "analyze",
  "evaluate",
  "create",
];

export interface WireOption {
  label: string;
  text: string;
}

/** What a test-taker sees. The sanitized route carries no key fields. */
export interface StudentQuestion {
  id: string;
  skill: string;
  question: string;
  options: WireOption[];
}

export interface TestPayload {
  version_id: string;
  items: StudentQuestion[];
}

/**
 * One row of a student submission. There is deliberately no `correct`
 * field in this type: grading is the server's job, so the client cannot
 * leak or even represent an answer key.
 */
export interface ResponseRow {
  question_id: string;
  attempted: boolean;
  answer_label?: OptionLabel;
  guessed: boolean;
  difficulty?: Difficulty;
  response_time_s?: number;
}

export interface ResponsesSubmit {
  rows: ResponseRow[];
}

export interface ResponsesReply {
  recorded: number;
  superseded: string[];
}

export interface DistractorTriple {
  plausibility: TriState;
  misconception: TriState;
  independence: TriState;
}

export interface AnnotationPayload {
  relevance: "yes" | "no";
  correctness: TriState;
  grade_level: TriState;
  similarity: TriState;
  blooms_level: SkillName | null;
  distractors: [DistractorTriple, DistractorTriple, DistractorTriple];
}

export interface AnnotationReply {
  recorded: boolean;
  superseded: boolean;
}

export interface QueueEntry {
  id: string;
  strategy: string;
  topic: string;
  raters: number;
}

export interface QueueReply {
  queue: QueueEntry[];
}

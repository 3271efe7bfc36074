/**
 * State machine behind the student test screen.
 *
 * One question at a time, in manifest order, no way back. Advancing
 * requires an answer, an explicit guess declaration, and a difficulty
 * pick; elapsed time is measured from when the question was rendered to
 * when it was submitted. The runner never sees, stores, or displays
 * correctness: grading happens server-side after the batch post.
 */

import {
  Difficulty,
  OptionLabel,
  ResponseRow,
  ResponsesReply,
  ResponsesSubmit,
  StudentQuestion,
  TestPayload,
} from "./types";
import { validateSubmission } from "./validation";
import { ApiError } from "./api";

export type Clock = () => number;

interface Draft {
  answerLabel: OptionLabel | null;
  guessed: boolean | null; // null until the toggle is explicitly touched
  difficulty: Difficulty | null;
}

function emptyDraft(): Draft {
  return { answerLabel: null, guessed: null, difficulty: null };
}

export class TestRunner {
  private readonly items: StudentQuestion[];
  private readonly clock: Clock;
  private readonly rows: ResponseRow[] = [];
  private index = 0;
  private renderedAt: number;
  private draft: Draft = emptyDraft();

  readonly versionId: string;

  constructor(manifest: TestPayload, clock: Clock = Date.now) {
    if (manifest.items.length === 0) {
      throw new Error("a test version with no questions cannot be run");
    }
    this.versionId = manifest.version_id;
    this.items = manifest.items.slice();
    this.clock = clock;
    this.renderedAt = clock();
  }

  current(): StudentQuestion | null {
    return this.finished() ? null : this.items[this.index]!;
  }

  position(): number {
    return this.index;
  }

  total(): number {
    return this.items.length;
  }

  finished(): boolean {
    return this.index >= this.items.length;
  }

  chooseAnswer(label: OptionLabel): void {
    this.assertActive();
    this.draft.answerLabel = label;
  }

  setGuessed(guessed: boolean): void {
    this.assertActive();
    this.draft.guessed = guessed;
  }

  setDifficulty(difficulty: Difficulty): void {
    this.assertActive();
    this.draft.difficulty = difficulty;
  }

  /** True once answer, guess toggle, and difficulty have all been set. */
  canAdvance(): boolean {
    return (
      !this.finished() &&
      this.draft.answerLabel !== null &&
      this.draft.guessed !== null &&
      this.draft.difficulty !== null
    );
  }

  /** Commit the current question and move on. There is no way back. */
  advance(): void {
    if (!this.canAdvance()) {
      throw new Error("answer, guess declaration, and difficulty are all required to advance");
    }
    const now = this.clock();
    const elapsedMs = Math.max(0, now - this.renderedAt);
    const question = this.items[this.index]!;
    this.rows.push({
      question_id: question.id,
      attempted: true,
      answer_label: this.draft.answerLabel!,
      guessed: this.draft.guessed!,
      difficulty: this.draft.difficulty!,
      response_time_s: elapsedMs / 1000,
    });
    this.index += 1;
    this.draft = emptyDraft();
    this.renderedAt = now;
  }

  /** The batch body for POST /tests/{version}/responses, validated locally. */
  buildSubmission(): ResponsesSubmit {
    if (!this.finished()) {
      throw new Error(`test not finished: ${this.items.length - this.index} question(s) left`);
    }
    const body: ResponsesSubmit = { rows: this.rows.slice() };
    const problems = validateSubmission(body.rows);
    if (problems.length > 0) {
      throw new Error(`submission failed local validation: ${problems.join("; ")}`);
    }
    return body;
  }

  private assertActive(): void {
    if (this.finished()) {
      throw new Error("the test is already finished");
    }
  }
}

export interface SubmitPort {
  submitResponses(versionId: string, body: ResponsesSubmit): Promise<ResponsesReply>;
}

/**
 * Holds a finished submission across network failures. Re-posting after a
 * partial success is safe: the service keys rows by (student, question)
 * and supersedes earlier copies.
 */
export class SubmissionBuffer {
  private body: ResponsesSubmit | null = null;

  constructor(
    private readonly port: SubmitPort,
    private readonly versionId: string,
  ) {}

  enqueue(body: ResponsesSubmit): void {
    this.body = body;
  }

  pending(): boolean {
    return this.body !== null;
  }

  /**
   * Attempt delivery. Returns the reply on success and clears the buffer;
   * returns null on a network failure (buffer kept for the next attempt).
   * An HTTP rejection is a bug in the caller, so it propagates.
   */
  async flush(): Promise<ResponsesReply | null> {
    if (this.body === null) {
      return null;
    }
    try {
      const reply = await this.port.submitResponses(this.versionId, this.body);
      this.body = null;
      return reply;
    } catch (err) {
      if (err instanceof ApiError) {
        throw err;
      }
      return null;
    }
  }
}

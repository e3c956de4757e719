/**
 * Wire schemas for the gateway API.
 *
 * Every object schema is `.strict()`: a payload carrying any field beyond the
 * documented blinded shape (for example anything assignment-related) fails
 * validation and is never rendered. This is the client half of the
 * double-blind contract.
 */

import { z } from "zod";

export const SnippetSchema = z
  .object({
    doc_id: z.string(),
    text: z.string(),
  })
  .strict();

export const JudgePairSchema = z
  .object({
    type: z.literal("pair"),
    pair_id: z.string(),
    query_id: z.string(),
    query_text: z.string(),
    left: z.array(SnippetSchema),
    right: z.array(SnippetSchema),
    auto_tie: z.boolean(),
    dataset_label: z.string(),
  })
  .strict();

export const NextResponseSchema = z.discriminatedUnion("done", [
  z
    .object({
      done: z.literal(false),
      judged: z.number().int().nonnegative(),
      total_judgeable: z.number().int().nonnegative(),
      pair: JudgePairSchema,
    })
    .strict(),
  z
    .object({
      done: z.literal(true),
      judged: z.number().int().nonnegative(),
      total_judgeable: z.number().int().nonnegative(),
    })
    .strict(),
]);

export const JudgmentAckSchema = z
  .object({
    recorded: z.literal(true),
    pair_id: z.string(),
    remaining: z.number().int().nonnegative(),
  })
  .strict();

export const SessionSummarySchema = z
  .object({
    session_id: z.string(),
    pair_count: z.number().int().nonnegative(),
    judgeable: z.number().int().nonnegative(),
    judged: z.number().int().nonnegative(),
    complete: z.boolean(),
  })
  .strict();

export const SessionListSchema = z
  .object({ sessions: z.array(SessionSummarySchema) })
  .strict();

export const ReportSchema = z
  .object({
    wins_a: z.number().int().nonnegative(),
    wins_b: z.number().int().nonnegative(),
    ties: z.number().int().nonnegative(),
    auto_ties: z.number().int().nonnegative(),
    candidate: z.string(),
    win_rate_excluding_ties: z.number().nullable(),
    latency_a_s: z.number(),
    latency_b_s: z.number(),
    query_count: z.number().int().nonnegative(),
    partial: z.boolean(),
    per_label: z.record(z.record(z.number())),
  })
  .strict();

export type Snippet = z.infer<typeof SnippetSchema>;
export type JudgePair = z.infer<typeof JudgePairSchema>;
export type NextResponse = z.infer<typeof NextResponseSchema>;
export type JudgmentAck = z.infer<typeof JudgmentAckSchema>;
export type SessionSummary = z.infer<typeof SessionSummarySchema>;
export type Report = z.infer<typeof ReportSchema>;

export type Choice = "left" | "right" | "tie";

/**
 * Wire types for the annotation service API, with zod validation so the
 * client can prove (and property-test) that no malformed payload is ever
 * emitted.
 */
import { z } from "zod";

export const INSPECTION_FLAGS = [
  "noise_dominant",
  "under_two_seconds_speech",
  "not_talking_to_phone",
  "emotion_varies",
  "identifiable_info",
] as const;

export type InspectionFlag = (typeof INSPECTION_FLAGS)[number];

const scale = z.number().int().min(1).max(9);

/** Body of POST /ratings. Either both scales are set, or at least one flag. */
export const ratingRequestSchema = z
  .object({
    session_id: z.string().min(1),
    annotator_id: z.string().min(1),
    segment_id: z.string().min(1),
    activation: scale.nullable(),
    valence: scale.nullable(),
    flags: z.array(z.enum(INSPECTION_FLAGS)),
  })
  .refine(
    (r) =>
      (r.activation !== null && r.valence !== null && r.flags.length === 0) ||
      (r.activation === null && r.valence === null && r.flags.length > 0),
    { message: "payload must carry both ratings xor at least one flag" },
  );

export type RatingRequest = z.infer<typeof ratingRequestSchema>;

export const sessionResponseSchema = z.object({
  session_id: z.string(),
  annotator_id: z.string(),
  progress: z.object({ position: z.number().int(), total: z.number().int() }),
});

export type SessionResponse = z.infer<typeof sessionResponseSchema>;

export const nextItemSchema = z.union([
  z.object({
    done: z.literal(false),
    segment_id: z.string(),
    audio_url: z.string(),
    progress: z.object({ position: z.number().int(), total: z.number().int() }),
  }),
  z.object({
    done: z.literal(true),
    progress: z.object({ position: z.number().int(), total: z.number().int() }),
  }),
]);

export type NextItem = z.infer<typeof nextItemSchema>;

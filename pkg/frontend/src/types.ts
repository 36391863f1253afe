export interface ImagePayload {
  png_base64: string;
  blob: string;
  values?: number[][];
}

export interface AnswerMeta {
  mode: "custom" | "oracle";
  model_space: number[];
  display_color: [number, number, number];
}

export interface CreateSessionResponse {
  session_id: string;
  checkpoint_id: string;
  color_space: string;
  max_answers: number;
  step: number;
  exhausted: boolean;
  prediction: ImagePayload;
  question: ImagePayload;
}

export interface AnswerResponse {
  session_id: string;
  step: number;
  exhausted: boolean;
  answer: AnswerMeta;
  prediction: ImagePayload;
  question: ImagePayload | null;
}

export interface SessionDetail {
  session_id: string;
  checkpoint_id: string;
  color_space: string;
  status: string;
  step: number;
  max_answers: number;
  exhausted: boolean;
  history: {
    predictions: ImagePayload[];
    questions: ImagePayload[];
    answers: AnswerMeta[];
  };
  arrays?: {
    input_x: number[][][];
    predictions: number[][][][];
    questions: number[][][];
    answers: number[][];
  };
}

export interface CheckpointInfo {
  id: string;
  image_size: [number, number];
  color_channels: number;
  color_space: string;
  step_count: number;
}

export * from "./types";
export * from "./validation";
export * from "./api";
export * from "./studentRunner";
export * from "./expertReview";

export * from "./types.js";
export { ApiClient, ApiError, type ConfirmHypothesisOptions } from "./api.js";
export { watchJob, WatchClosedError, type WatchHandle, type WatchOptions } from "./events.js";
export {
  buildCanvas,
  availableActions,
  pendingConfirmation,
  type CanvasActions,
  type CanvasInputs,
  type CanvasTab,
  type CanvasViewModel,
  type ChatEntry,
  type PendingConfirmation,
} from "./canvas.js";
export {
  buildConfigView,
  type ConfigCell,
  type ConfigRowView,
  type ConfigTableView,
} from "./views/config.js";
export {
  buildIdeasView,
  groupHits,
  type DocumentGroupView,
  type IdeasViewModel,
  type LeverPlanView,
  type MetricPlanView,
  type RetrievedChunkView,
} from "./views/ideas.js";
export {
  buildResultsView,
  type FailureView,
  type MetricChartView,
  type MetricPanelView,
  type ResultsViewModel,
  type SeriesTrace,
} from "./views/results.js";
export { SessionController, StageGateError, type ControllerOptions } from "./controller.js";

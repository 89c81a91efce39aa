export {
    AerocoupleClient,
    AerocoupleError,
} from "./client.js";
export type {
    ConfigHandle,
    FluidSolver,
    IdentifiedMode,
    ModelHandle,
    SolidSolver,
    SweepResult,
    SweepRow,
    TransferFunctionResult,
} from "./client.js";
export { History, parseHistoryCsv } from "./history.js";
export type { HistoryTable } from "./history.js";
